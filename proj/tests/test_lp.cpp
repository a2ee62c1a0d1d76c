#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "ocmdp/baseline.hpp"
#include "ocmdp/rng.hpp"
#include "ocmdp/simplex.hpp"
#include "ocmdp/stationary.hpp"
#include "oracles.hpp"

using namespace ocmdp;

namespace {

LinearProgram make_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A_eq,
                      const Eigen::VectorXd& b_eq, const Eigen::MatrixXd& G,
                      const Eigen::VectorXd& h) {
    LinearProgram lp;
    lp.c = c;
    lp.A_eq = A_eq;
    lp.b_eq = b_eq;
    lp.G = G;
    lp.h = h;
    return lp;
}

Eigen::MatrixXd no_rows(int n) { return Eigen::MatrixXd(0, n); }
Eigen::VectorXd no_rhs() { return Eigen::VectorXd(0); }

// Lower bound q(y, mu) from weak duality over the box 0 <= x <= 1, valid for
// any multipliers with mu >= 0 regardless of how they were produced.
double dual_box_bound(const LinearProgram& lp, const Eigen::VectorXd& y_all) {
    const int me = static_cast<int>(lp.A_eq.rows());
    const int mi = static_cast<int>(lp.G.rows());
    Eigen::VectorXd y_eq = y_all.head(me);
    Eigen::VectorXd mu = (-y_all.tail(mi)).cwiseMax(0.0);
    Eigen::VectorXd reduced = lp.c;
    if (me > 0) reduced -= lp.A_eq.transpose() * y_eq;
    if (mi > 0) reduced += lp.G.transpose() * mu;
    double q = (me > 0 ? y_eq.dot(lp.b_eq) : 0.0) - (mi > 0 ? mu.dot(lp.h) : 0.0);
    for (int j = 0; j < reduced.size(); ++j) q += std::min(0.0, reduced(j));
    return q;
}

}  // namespace

TEST_SUITE("baseline-lp") {

TEST_CASE("simplex: one-variable program with active bound") {
    Eigen::VectorXd c(1), h(1);
    c << -1.0;
    h << 1.0;
    Eigen::MatrixXd G(1, 1);
    G << 1.0;
    auto sol = solve_lp(make_lp(c, no_rows(1), no_rhs(), G, h));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.duals_ineq(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.primal_residual(make_lp(c, no_rows(1), no_rhs(), G, h)) <= 1e-12);
}

TEST_CASE("simplex: minimum of x over [0,1] sits at zero") {
    Eigen::VectorXd c(1), h(1);
    c << 1.0;
    h << 1.0;
    Eigen::MatrixXd G(1, 1);
    G << 1.0;
    auto sol = solve_lp(make_lp(c, no_rows(1), no_rhs(), G, h));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.duals_ineq(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("simplex: equality program and its dual") {
    Eigen::VectorXd c(2), b(1);
    c << 1.0, 2.0;
    b << 1.0;
    Eigen::MatrixXd A(1, 2);
    A << 1.0, 1.0;
    auto sol = solve_lp(make_lp(c, A, b, no_rows(2), no_rhs()));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.x(1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol.duals_eq(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("simplex: mixed program with both rows active") {
    // min -x - 2y  s.t. x + y <= 1, y <= 1/2: optimum (1/2, 1/2), value -3/2,
    // multipliers (1, 1) from stationarity of c + G^T mu = 0.
    Eigen::VectorXd c(2), h(2);
    c << -1.0, -2.0;
    h << 1.0, 0.5;
    Eigen::MatrixXd G(2, 2);
    G << 1.0, 1.0, 0.0, 1.0;
    auto lp = make_lp(c, no_rows(2), no_rhs(), G, h);
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(sol.x(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.x(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.duals_ineq(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.duals_ineq(1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.complementary_slackness(lp) <= 1e-10);
}

TEST_CASE("simplex: inconsistent systems are reported infeasible") {
    Eigen::VectorXd c(2), b(2);
    c << 1.0, 1.0;
    b << 1.0, 2.0;
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 1.0, 1.0, 1.0;
    CHECK(solve_lp(make_lp(c, A, b, no_rows(2), no_rhs())).status == LpStatus::infeasible);

    Eigen::VectorXd c1(1), h1(1);
    c1 << 1.0;
    h1 << -1.0;
    Eigen::MatrixXd G1(1, 1);
    G1 << 1.0;  // x <= -1 against x >= 0
    CHECK(solve_lp(make_lp(c1, no_rows(1), no_rhs(), G1, h1)).status == LpStatus::infeasible);
}

TEST_CASE("simplex: unbounded directions are detected") {
    Eigen::VectorXd c(2), h(1);
    c << -1.0, 0.0;
    h << 1.0;
    Eigen::MatrixXd G(1, 2);
    G << 0.0, 1.0;  // only y is bounded; -x falls forever
    CHECK(solve_lp(make_lp(c, no_rows(2), no_rhs(), G, h)).status == LpStatus::unbounded);

    Eigen::VectorXd c2(2);
    c2 << -1.0, 1.0;
    CHECK(solve_lp(make_lp(c2, no_rows(2), no_rhs(), no_rows(2), no_rhs())).status ==
          LpStatus::unbounded);
    Eigen::VectorXd c3 = Eigen::VectorXd::Ones(2);
    auto sol = solve_lp(make_lp(c3, no_rows(2), no_rhs(), no_rows(2), no_rhs()));
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == 0.0);
}

TEST_CASE("simplex: duplicated equality rows are tolerated") {
    Eigen::VectorXd c(2), b(2);
    c << 1.0, 2.0;
    b << 1.0, 1.0;
    Eigen::MatrixXd A(2, 2);
    A << 1.0, 1.0, 1.0, 1.0;
    auto lp = make_lp(c, A, b, no_rows(2), no_rhs());
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.primal_residual(lp) <= 1e-10);
}

TEST_CASE("simplex: random programs agree with basis enumeration") {
    int solved = 0, infeasible = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto rng = make_engine(seed, 0x6c70ULL);
        std::uniform_int_distribution<int> nvars(3, 5), nineq(0, 2);
        std::uniform_real_distribution<double> pos(0.3, 1.2), any(-1.0, 1.0),
            rhs_draw(-0.2, 1.0);
        const int n = nvars(rng);
        const int mi = nineq(rng);
        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) c(j) = any(rng);
        Eigen::MatrixXd A(1, n);
        for (int j = 0; j < n; ++j) A(0, j) = pos(rng);  // bounded feasible set
        Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
        Eigen::MatrixXd G(mi, n);
        Eigen::VectorXd h(mi);
        for (int r = 0; r < mi; ++r) {
            for (int j = 0; j < n; ++j) G(r, j) = any(rng);
            h(r) = rhs_draw(rng);
        }
        auto lp = make_lp(c, A, b, G, h);
        auto sol = solve_lp(lp);
        auto brute = oracle::brute_force_lp(lp);
        if (!brute.has_value()) {
            CHECK(sol.status == LpStatus::infeasible);
            ++infeasible;
            continue;
        }
        REQUIRE(sol.status == LpStatus::optimal);
        CHECK(std::abs(sol.value - brute->first) <= 1e-8);
        CHECK(sol.primal_residual(lp) <= 1e-8);
        CHECK(sol.complementary_slackness(lp) <= 1e-6);
        if (sol.duals_ineq.size() > 0) CHECK(sol.duals_ineq.minCoeff() >= 0.0);
        ++solved;
    }
    CHECK(solved >= 40);      // the family must actually exercise the solver
    CHECK(infeasible >= 1);   // and the infeasible branch
}

TEST_CASE("simplex: every snapshot obeys weak duality") {
    auto fix = oracle::small_dual_coupled_instance(3);
    REQUIRE(fix.ok);
    LinearProgram lp = assemble_coupled_lp(fix.models, fix.mean_f, fix.mean_g, fix.rhs);

    std::vector<LpSnapshot> snaps;
    auto sol = solve_lp(lp, [&](const LpSnapshot& s) { snaps.push_back(s); });
    REQUIRE(sol.status == LpStatus::optimal);
    REQUIRE(snaps.size() >= 3);

    long last_iter = -1;
    for (const auto& s : snaps) {
        CHECK((s.phase == 1 || s.phase == 2));
        CHECK(s.iteration >= last_iter);
        last_iter = s.iteration;
        CHECK(dual_box_bound(lp, s.y) <= sol.value + 1e-9);
    }
    // At the optimal basis the bound is tight.
    CHECK(dual_box_bound(lp, snaps.back().y) >= sol.value - 1e-7);
}

TEST_CASE("theory constants: frozen unit-scale values") {
    auto tc = theory_constants(1, 1, 1.0, 1.0, {{1, 1}});
    CHECK(tc.C == doctest::Approx(28.689359252987364).epsilon(1e-14));
    CHECK(tc.regret_const == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(tc.violation_const == doctest::Approx(58.378718505974728).epsilon(1e-14));
}

TEST_CASE("theory constants: long-double re-derivation agrees") {
    const int m = 2, K = 3;
    const double psi = 1.5, eta = 0.3;
    std::vector<std::pair<int, int>> sizes{{3, 2}, {2, 4}, {5, 3}};
    auto tc = theory_constants(m, K, psi, eta, sizes);

    long double sum_sa = 0.0L, sum_sqrt = 0.0L;
    for (auto [s, a] : sizes) {
        sum_sa += static_cast<long double>(s) * a;
        sum_sqrt += sqrtl(static_cast<long double>(m) * a * s);
    }
    const long double lpsi = psi, leta = eta;
    const long double ln_term = logl(1.0L + 8.0L * expl(0.25L));
    const long double C = 8.0L * K * lpsi / leta + 3.0L * m * K * K * lpsi * lpsi / (leta * leta) +
                          (4.0L * K + m * lpsi) / leta + 2.0L * m * K * lpsi + leta +
                          4.0L * sqrtl(static_cast<long double>(m)) * K * lpsi * ln_term;
    const long double regret = 2.0L * K + 0.5L * lpsi * lpsi * sum_sa + 2.5L * m * K * K * lpsi * lpsi;
    const long double viol = C + lpsi * C * sum_sqrt + lpsi * lpsi * sum_sa;
    CHECK(std::abs(tc.C - static_cast<double>(C)) <= 1e-12 * static_cast<double>(C));
    CHECK(std::abs(tc.regret_const - static_cast<double>(regret)) <=
          1e-12 * static_cast<double>(regret));
    CHECK(std::abs(tc.violation_const - static_cast<double>(viol)) <=
          1e-12 * static_cast<double>(viol));
}

TEST_CASE("theory constants: dimension and validation errors") {
    CHECK_THROWS_AS(theory_constants(1, 2, 1.0, 1.0, {{2, 2}}), DimensionError);
    CHECK_THROWS_AS(theory_constants(1, 1, 1.0, 0.0, {{2, 2}}), ValidationError);
    CHECK_THROWS_AS(theory_constants(1, 1, -1.0, 1.0, {{2, 2}}), ValidationError);
    auto free_tc = theory_constants(0, 2, 1.0, 0.0, {{2, 2}, {3, 2}});
    CHECK(free_tc.C == 0.0);
    CHECK(free_tc.regret_const == doctest::Approx(2.0 * 2 + 0.5 * 10.0).epsilon(1e-15));
}

TEST_CASE("coupled assembly: block structure of the program") {
    std::vector<MdpModel> models{oracle::random_positive_model(2, 2, 21),
                                 oracle::random_positive_model(3, 2, 22)};
    std::vector<Eigen::VectorXd> f{Eigen::VectorXd::LinSpaced(4, 0.1, 0.4),
                                   Eigen::VectorXd::LinSpaced(6, -0.3, 0.2)};
    std::vector<std::vector<Eigen::VectorXd>> g(1);
    g[0] = {Eigen::VectorXd::Constant(4, 0.5), Eigen::VectorXd::Constant(6, -0.25)};
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(1, 0.125);

    LinearProgram lp = assemble_coupled_lp(models, f, g, rhs);
    REQUIRE(lp.num_vars() == 10);
    REQUIRE(lp.A_eq.rows() == 2 + 3);
    CHECK(lp.c.head(4).isApprox(f[0]));
    CHECK(lp.c.tail(6).isApprox(f[1]));
    CHECK(lp.A_eq.topRightCorner(2, 6).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lp.A_eq.bottomLeftCorner(3, 4).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lp.A_eq.topLeftCorner(2, 4).isApprox(build_polyhedron(models[0]).A));
    CHECK(lp.b_eq.head(2).isApprox(build_polyhedron(models[0]).b));
    CHECK(lp.G.row(0).head(4).transpose().isApprox(g[0][0]));
    CHECK(lp.G.row(0).tail(6).transpose().isApprox(g[0][1]));
    CHECK(lp.h(0) == 0.125);

    CHECK_THROWS_AS(
        assemble_coupled_lp(models, {f[0]}, g, rhs), DimensionError);
    CHECK_THROWS_AS(
        assemble_coupled_lp(models, f, g, Eigen::VectorXd::Zero(2)), DimensionError);
}

TEST_CASE("unconstrained baseline matches pure-policy enumeration") {
    const std::vector<std::pair<int, int>> shapes{{2, 2}, {3, 2}, {2, 3}, {4, 2}, {3, 3}};
    std::vector<std::vector<Eigen::VectorXd>> no_g;
    int idx = 0;
    for (auto [ns, na] : shapes) {
        for (int rep = 0; rep < 5; ++rep, ++idx) {
            MdpModel model = oracle::random_positive_model(ns, na, 100 + idx);
            auto rng = make_engine(200, idx);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            Eigen::VectorXd f(model.table_size());
            for (int j = 0; j < f.size(); ++j) f(j) = unif(rng);

            auto sol = best_stationary({model}, {f}, no_g);
            REQUIRE(sol.status == LpStatus::optimal);
            const double enumerated = oracle::pure_policy_best(model, f);
            CHECK(std::abs(sol.value - enumerated) <= 1e-9);
            CHECK(OccupancyVector{sol.theta[0]}.feasibility_residual(model) <= 1e-8);
        }
    }
}

TEST_CASE("constant penalty tables price every MDP at the same level") {
    std::vector<MdpModel> models{oracle::random_positive_model(2, 2, 31),
                                 oracle::random_positive_model(3, 3, 32)};
    std::vector<Eigen::VectorXd> f{Eigen::VectorXd::Constant(4, 0.7),
                                   Eigen::VectorXd::Constant(9, 0.7)};
    auto sol = best_stationary(models, f, {});
    REQUIRE(sol.status == LpStatus::optimal);
    CHECK(sol.value == doctest::Approx(1.4).epsilon(1e-10));  // each block sums to one
}

TEST_CASE("constrained baseline matches the dense grid oracle") {
    for (std::uint64_t seed : {11ULL, 12ULL}) {
        auto fix = oracle::small_dual_coupled_instance(seed);
        REQUIRE(fix.ok);
        LinearProgram lp = assemble_coupled_lp(fix.models, fix.mean_f, fix.mean_g, fix.rhs);
        auto sol = solve_lp(lp);
        REQUIRE(sol.status == LpStatus::optimal);
        auto grid = oracle::grid_search_best(fix.models, fix.mean_f, fix.mean_g, fix.rhs, 101);
        REQUIRE(grid.has_value());
        CHECK(*grid >= sol.value - 1e-9);       // grid points are feasible
        CHECK(*grid - sol.value <= 1e-3);       // and the grid gets this close
        CHECK(sol.duals_ineq.minCoeff() >= 0.0);
        for (int k = 0; k < 2; ++k)
            CHECK(OccupancyVector{sol.x.segment(4 * k, 4)}.feasibility_residual(fix.models[k]) <=
                  1e-8);
    }
}

TEST_CASE("optimal duals separate: Lagrangian bound at random feasible points") {
    auto fix = oracle::small_dual_coupled_instance(7);
    REQUIRE(fix.ok);
    auto sol = solve_lp(assemble_coupled_lp(fix.models, fix.mean_f, fix.mean_g, fix.rhs));
    REQUIRE(sol.status == LpStatus::optimal);
    std::vector<std::vector<Eigen::VectorXd>> vertices;
    for (const auto& model : fix.models) vertices.push_back(pure_policy_vertices(model));

    for (int rep = 0; rep < 40; ++rep) {
        auto rng = make_engine(404, rep);
        double f_val = 0.0, g_val = 0.0;
        for (int k = 0; k < 2; ++k) {
            Eigen::VectorXd z = sample_vertex_mixture(vertices[k], rng);
            f_val += fix.mean_f[k].dot(z);
            g_val += fix.mean_g[0][k].dot(z);
        }
        CHECK(f_val + sol.duals_ineq(0) * (g_val - fix.rhs(0)) >= sol.value - 1e-6);
    }
}

TEST_CASE("relaxation value is monotone in the slack") {
    auto fix = oracle::small_dual_coupled_instance(19);
    REQUIRE(fix.ok);
    // Shift the tables so the fixture's rhs becomes zero slack.
    auto g = fix.mean_g;
    for (int k = 0; k < 2; ++k)
        g[0][k] = fix.mean_g[0][k] - Eigen::VectorXd::Constant(4, fix.rhs(0) / 2.0);

    double prev = best_stationary(fix.models, fix.mean_f, g).value;
    for (double slack : {0.05, 0.1, 0.5}) {
        const double val = relaxed_stationary(fix.models, fix.mean_f, g, slack).value;
        CHECK(val <= prev + 1e-10);
        prev = val;
    }
    LinearProgram free_lp = assemble_coupled_lp(fix.models, fix.mean_f, g, Eigen::VectorXd::Zero(1));
    free_lp.G.resize(0, free_lp.num_vars());
    free_lp.h.resize(0);
    CHECK(relaxed_stationary(fix.models, fix.mean_f, g, 1e3).value ==
          doctest::Approx(solve_lp(free_lp).value).epsilon(1e-10));
    CHECK_THROWS_AS(relaxed_stationary(fix.models, fix.mean_f, g, -0.1), ValidationError);
}

TEST_CASE("perturbation gap stays inside the sensitivity bound") {
    auto fix = oracle::small_dual_coupled_instance(23);
    REQUIRE(fix.ok);
    auto g = fix.mean_g;
    double psi = 0.0;
    for (int k = 0; k < 2; ++k) {
        g[0][k] = fix.mean_g[0][k] - Eigen::VectorXd::Constant(4, fix.rhs(0) / 2.0);
        psi = std::max(psi, g[0][k].cwiseAbs().maxCoeff());
    }
    const double slack = 0.01, eta = 0.1;
    auto rep = perturbation_gap_check(fix.models, fix.mean_f, g, slack, psi, eta);
    CHECK(rep.ok);
    CHECK(rep.gap >= -1e-9);
    CHECK(rep.gap <= rep.bound + 1e-9);
    CHECK(rep.bound == doctest::Approx(slack * 2.0 * std::sqrt(1.0) * psi * 2.0 / eta));
    // Local sensitivity: the slope at slack zero is the active dual.
    CHECK(rep.gap <= slack * fix.dual + 1e-6);

    CHECK_THROWS_AS(perturbation_gap_check(fix.models, fix.mean_f, g, slack, psi, 0.0),
                    ValidationError);
    auto impossible = g;
    impossible[0][0] = Eigen::VectorXd::Constant(4, 1.0);
    impossible[0][1] = Eigen::VectorXd::Constant(4, 1.0);
    CHECK_THROWS_AS(perturbation_gap_check(fix.models, fix.mean_f, impossible, slack, psi, eta),
                    ValidationError);
}

}  // TEST_SUITE
