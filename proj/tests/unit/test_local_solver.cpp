#include <doctest.h>

#include <cmath>
#include <random>

#include "edgealloc/config.hpp"
#include "edgealloc/local_solver.hpp"
#include "support/oracles.hpp"

using namespace edgealloc;

namespace {

LocalDomain make_domain(std::vector<HalfPlane> rows, std::size_t dim) {
  LocalDomain d;
  d.dimension = dim;
  d.rows = std::move(rows);
  return d;
}

LocalDomain shipped_domain(std::size_t node) {
  const auto doc = load_config_file(EDGEALLOC_DEFAULT_CONFIG);
  return build_local_domain(doc.network.nodes[node], doc.network.tasks, node);
}

LocalDomain random_domain(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cost(1.0, 10.0), budget(10.0, 60.0);
  return make_domain({{{cost(rng), cost(rng)}, budget(rng)}, {{cost(rng), cost(rng)}, budget(rng)}}, 2);
}

ConcaveTerm squared_distance_to(std::vector<double> target) {
  ConcaveTerm term;
  term.value = [target](std::span<const double> x) {
    double s = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) s -= (x[t] - target[t]) * (x[t] - target[t]);
    return s;
  };
  term.gradient = [target](std::span<const double> x) {
    std::vector<double> g(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) g[t] = -2.0 * (x[t] - target[t]);
    return g;
  };
  return term;
}

}  // namespace

TEST_CASE("Raspberry Pi running only wildfire is memory bound") {
  const auto dom = shipped_domain(0);
  const auto sol = solve_local_lp(dom, std::vector<double>{1, 0});
  const double expected = std::min(2400.0 / 42.0, 1800.0 / 67.2);
  CHECK(expected == doctest::Approx(oracles::single_task_capacity(dom, 0)));
  CHECK(sol.x[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(sol.x[1] == 0.0);
  CHECK(sol.x[0] == doctest::Approx(26.785714285714285));
}

TEST_CASE("Jetson running only cloud is memory bound at 15 runs") {
  const auto dom = shipped_domain(2);
  const auto sol = solve_local_lp(dom, std::vector<double>{0, 1});
  CHECK(sol.x[0] == 0.0);
  CHECK(sol.x[1] == doctest::Approx(std::min(6000.0 / 70.0, 3600.0 / 240.0)).epsilon(1e-12));
  CHECK(sol.x[1] == doctest::Approx(15.0));
}

TEST_CASE("zero objective returns the origin and flags the tie") {
  for (std::size_t node : {0u, 2u}) {
    const auto sol = solve_local_lp(shipped_domain(node), std::vector<double>{0, 0});
    CHECK(sol.objective_value == 0.0);
    CHECK(sol.x == std::vector<double>{0, 0});
    CHECK(sol.status == SolveStatus::degenerate_tie);
  }
}

TEST_CASE("parallel objective face resolves to the lexicographically smallest vertex") {
  // x + y <= 4 with c = (1, 1): every point of the face is optimal.
  const auto dom = make_domain({{{1, 1}, 4}, {{1, 0}, 3}}, 2);
  const auto sol = solve_local_lp(dom, std::vector<double>{1, 1});
  CHECK(sol.status == SolveStatus::degenerate_tie);
  CHECK(sol.objective_value == doctest::Approx(4.0));
  CHECK(sol.x[0] == doctest::Approx(0.0));
  CHECK(sol.x[1] == doctest::Approx(4.0));
}

TEST_CASE("LP optimum equals the vertex-enumeration optimum on random domains") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coef(-2.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dom = random_domain(rng);
    const std::vector<double> c{coef(rng), coef(rng)};
    const auto sol = solve_local_lp(dom, c);
    const auto ref = oracles::vertex_enumeration_max(oracles::polytope_of(dom), c);
    CHECK(sol.objective_value == doctest::Approx(ref.value).epsilon(1e-9));
    CHECK(dom.max_violation(sol.x) <= 1e-9);
  }
}

TEST_CASE("argmax is invariant under positive scaling of the objective") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> coef(-1.0, 3.0), scale(0.01, 100.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dom = random_domain(rng);
    std::vector<double> c{coef(rng), coef(rng)};
    const auto a = solve_local_lp(dom, c);
    const double s = scale(rng);
    for (double& v : c) v *= s;
    const auto b = solve_local_lp(dom, c);
    CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-9));
    CHECK(a.x[1] == doctest::Approx(b.x[1]).epsilon(1e-9));
  }
}

TEST_CASE("support function is subadditive") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dom = random_domain(rng);
    const std::vector<double> c1{coef(rng), coef(rng)}, c2{coef(rng), coef(rng)};
    const std::vector<double> sum{c1[0] + c2[0], c1[1] + c2[1]};
    CHECK(solve_local_lp(dom, sum).objective_value <=
          solve_local_lp(dom, c1).objective_value + solve_local_lp(dom, c2).objective_value + 1e-9);
  }
}

TEST_CASE("grid search agrees with the LP within the grid bound") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> coef(0.0, 4.0);
  const double grid = 1e-2;
  for (int trial = 0; trial < 30; ++trial) {
    const auto dom = random_domain(rng);
    const std::vector<double> c{coef(rng), coef(rng)};
    const double bound = std::max(c[0], c[1]) * grid * 2.0;
    const auto lp = solve_local_lp(dom, c);
    const auto bf = brute_force_local(dom, c, grid);
    CHECK(bf.objective_value <= lp.objective_value + 1e-9);
    CHECK(lp.objective_value - bf.objective_value <= bound);
  }
}

TEST_CASE("grid search corner cases") {
  SUBCASE("domain {0}") {
    const auto dom = make_domain({{{1, 1}, 0}, {{2, 1}, 0}}, 2);
    const auto sol = brute_force_local(dom, std::vector<double>{1, 1}, 0.1);
    CHECK(sol.x == std::vector<double>{0, 0});
  }
  SUBCASE("negative coefficient zeroes its coordinate") {
    const auto sol = brute_force_local(shipped_domain(0), std::vector<double>{-1, 2}, 0.01);
    CHECK(sol.x[0] == 0.0);
    CHECK(sol.x[1] > 0.0);
  }
  SUBCASE("non-positive grid is a parameter error") {
    CHECK_THROWS_AS(brute_force_local(shipped_domain(0), std::vector<double>{1, 1}, 0.0), ParameterError);
    CHECK_THROWS_AS(brute_force_local(shipped_domain(0), std::vector<double>{1, 1}, -1.0), ParameterError);
  }
  SUBCASE("more than three tasks is rejected") {
    const auto dom = make_domain({{{1, 1, 1, 1}, 1}}, 4);
    CHECK_THROWS_AS(brute_force_local(dom, std::vector<double>{1, 1, 1, 1}, 0.1), ParameterError);
  }
}

TEST_CASE("projection matches the active-set enumeration oracle") {
  std::mt19937_64 rng(15);
  std::uniform_real_distribution<double> pt(-20.0, 40.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dom = random_domain(rng);
    const std::vector<double> y{pt(rng), pt(rng)};
    const auto p = project_onto_domain(dom, y);
    const auto ref = oracles::brute_projection(oracles::polytope_of(dom), y);
    REQUIRE(ref.size() == 2);
    CHECK(p[0] == doctest::Approx(ref[0]).epsilon(1e-9).scale(1.0));
    CHECK(p[1] == doctest::Approx(ref[1]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("concave path finds an interior optimum") {
  const auto box = make_domain({{{1, 0}, 10}, {{0, 1}, 10}}, 2);
  LocalObjective obj{{0, 0}, squared_distance_to({1, 1})};
  const auto sol = solve_local_concave(box, obj, 1e-9);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("concave path clips to the binding facet, equal to the exact projection") {
  const auto dom = shipped_domain(0);
  LocalObjective obj{{0, 0}, squared_distance_to({100, 0})};
  const auto sol = solve_local_concave(dom, obj, 1e-10);
  const auto ref = oracles::brute_projection(oracles::polytope_of(dom), {100, 0});
  CHECK(sol.x[0] == doctest::Approx(ref[0]).epsilon(1e-8));
  CHECK(sol.x[1] == doctest::Approx(ref[1]).epsilon(1e-8).scale(1.0));
  CHECK(dom.max_violation(sol.x) <= 1e-9);
}

TEST_CASE("linear objective through the concave path matches the LP path") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> coef(-1.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dom = random_domain(rng);
    const std::vector<double> c{coef(rng), coef(rng)};
    const auto lp = solve_local_lp(dom, c);
    const auto pg = solve_local_concave(dom, LocalObjective{c, std::nullopt}, 1e-9);
    CHECK(pg.objective_value == doctest::Approx(lp.objective_value).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("finite-difference gradient check") {
  auto good = squared_distance_to({3, -2});
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pt(0.1, 10.0);
  for (int k = 0; k < 20; ++k) {
    const std::vector<double> x{pt(rng), pt(rng)};
    CHECK(gradient_check_error(good, x) <= 1e-4);
  }
  auto bad = good;
  bad.gradient = [](std::span<const double> x) { return std::vector<double>{x[0], x[1]}; };
  CHECK(gradient_check_error(bad, std::vector<double>{1, 1}) > 1e-4);
  const auto dom = shipped_domain(0);
  CHECK_THROWS_AS(solve_local_concave(dom, LocalObjective{{0, 0}, bad}, 1e-9), ParameterError);
}

TEST_CASE("iteration cap raises with the best iterate attached") {
  const auto dom = shipped_domain(0);
  ConcaveOptions opts;
  opts.max_iterations = 1;
  LocalObjective obj{{0, 0}, squared_distance_to({5, 1})};
  try {
    solve_local_concave(dom, obj, 1e-12, opts);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.best_iterate().x.size() == 2);
    CHECK(dom.contains(e.best_iterate().x));
  }
}
