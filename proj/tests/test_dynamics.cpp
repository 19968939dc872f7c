#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "miocp/dynamics.hpp"
#include "miocp/errors.hpp"
#include "oracles.hpp"

using namespace miocp;

namespace {

Trajectory propagate_scalar(double a, double v_mode, const Eigen::VectorXd& y0,
                            const TimeGrid& grid, IntegratorScheme scheme) {
  GeneratorMatrix gen(Eigen::MatrixXd::Constant(1, 1, a));
  SemilinearTerm f;
  f.evaluator = [](double, const Eigen::VectorXd& y, const Eigen::VectorXd&, int v) {
    return (static_cast<double>(v) * y).eval();
  };
  f.lipschitz_modulus = [](double) { return 1.0; };
  f.linear_in_yu = true;
  Propagator prop(gen, f, grid, 0, 2, scheme);
  return prop.propagate(y0, OrdinaryControlPath(grid, 0),
                        IntegerControlPath::constant(grid, static_cast<int>(v_mode), 2));
}

}  // namespace

TEST_CASE("zero dynamics give a constant trajectory") {
  const TimeGrid grid(0.0, 1.0, 5);
  const GeneratorMatrix gen(Eigen::MatrixXd::Zero(3, 3));
  const Eigen::VectorXd y0 = (Eigen::VectorXd(3) << 1.5, -2.0, 0.25).finished();
  const Trajectory traj = propagate(gen, SemilinearTerm::zero(3), y0,
                                    OrdinaryControlPath(grid, 0),
                                    IntegerControlPath::constant(grid, 0, 1), grid);
  for (const auto& y : traj.states) CHECK((y - y0).norm() == doctest::Approx(0.0));
}

TEST_CASE("scalar decay matches the closed form") {
  const TimeGrid grid(0.0, 1.0, 8);
  const GeneratorMatrix gen(Eigen::MatrixXd::Constant(1, 1, -1.0));
  const Trajectory traj = propagate(gen, SemilinearTerm::zero(1),
                                    Eigen::VectorXd::Ones(1), OrdinaryControlPath(grid, 0),
                                    IntegerControlPath::constant(grid, 0, 1), grid);
  CHECK(traj.terminal()(0) ==
        doctest::Approx(oracles::scalar_exponential(1.0, -1.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("bilinear mode is integrated exactly by the affine scheme") {
  const TimeGrid grid(0.0, 1.0, 4);
  const Trajectory traj = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                           IntegratorScheme::AffineExponential);
  CHECK(traj.terminal()(0) == doctest::Approx(std::numbers::e).epsilon(1e-13));
}

TEST_CASE("propagate rejects dimension mismatches") {
  const TimeGrid grid(0.0, 1.0, 4);
  const GeneratorMatrix gen(Eigen::MatrixXd::Zero(2, 2));
  CHECK_THROWS_AS(propagate(gen, SemilinearTerm::zero(2), Eigen::VectorXd::Ones(3),
                            OrdinaryControlPath(grid, 0),
                            IntegerControlPath::constant(grid, 0, 1), grid),
                  ValidationError);
}

TEST_CASE("propagate reports the first non-finite cell") {
  const TimeGrid grid(0.0, 1.0, 4);
  const GeneratorMatrix gen(Eigen::MatrixXd::Zero(1, 1));
  SemilinearTerm f;
  f.evaluator = [](double t, const Eigen::VectorXd&, const Eigen::VectorXd&, int) {
    return Eigen::VectorXd::Constant(1, t >= 0.5 ? std::nan("") : 0.0).eval();
  };
  f.lipschitz_modulus = [](double) { return 1.0; };
  f.linear_in_yu = false;
  try {
    propagate(gen, f, Eigen::VectorXd::Ones(1), OrdinaryControlPath(grid, 0),
              IntegerControlPath::constant(grid, 0, 1), grid);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    // The corrector samples the right node, so the step over [0.25, 0.5]
    // is the first to turn non-finite.
    CHECK(std::string(e.what()).find("cell 1") != std::string::npos);
  }
}

TEST_CASE("propagate is deterministic") {
  const TimeGrid grid(0.0, 1.0, 16);
  const Trajectory a = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                        IntegratorScheme::AffineExponential);
  const Trajectory b = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                        IntegratorScheme::AffineExponential);
  for (int i = 0; i < grid.n_nodes(); ++i)
    CHECK(a.states[static_cast<std::size_t>(i)](0) == b.states[static_cast<std::size_t>(i)](0));
}

TEST_CASE("gronwall envelope closed forms") {
  const TimeGrid grid(0.0, 1.0, 10);
  SUBCASE("identity envelope") {
    const auto c = gronwall_envelope(make_gronwall_data(1.0, 0.0, [](double) { return 0.0; }, grid),
                                     grid);
    for (double ci : c) CHECK(ci == doctest::Approx(1.0));
  }
  SUBCASE("unit k") {
    const auto c = gronwall_envelope(make_gronwall_data(1.0, 0.0, [](double) { return 1.0; }, grid),
                                     grid);
    CHECK(c.back() == doctest::Approx(std::numbers::e).epsilon(1e-12));
  }
  SUBCASE("gamma and w0") {
    const auto c = gronwall_envelope(make_gronwall_data(2.0, 1.0, [](double) { return 0.0; }, grid),
                                     grid);
    CHECK(c.back() == doctest::Approx(2.0 * std::numbers::e).epsilon(1e-12));
  }
}

TEST_CASE("semigroup bound estimation") {
  const TimeGrid grid(0.0, 1.0, 16);
  SUBCASE("identity semigroup") {
    const GronwallData data = estimate_semigroup_bounds(GeneratorMatrix(Eigen::MatrixXd::Zero(2, 2)),
                                                        grid);
    CHECK(data.gamma == doctest::Approx(1.0));
    CHECK(data.w0 == doctest::Approx(0.0));
  }
  SUBCASE("contraction") {
    const GronwallData data = estimate_semigroup_bounds(
        GeneratorMatrix(Eigen::MatrixXd::Constant(1, 1, -1.0)), grid);
    CHECK(data.gamma == doctest::Approx(1.0));
    CHECK(data.w0 == doctest::Approx(0.0));
  }
  SUBCASE("nilpotent block is dominated at every node") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 1) = 1.0;
    const GeneratorMatrix gen(a);
    const GronwallData data = estimate_semigroup_bounds(gen, grid);
    for (int i = 0; i < grid.n_nodes(); ++i) {
      const double t = grid.node(i);
      Eigen::MatrixXd e = (a * t).exp();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
      CHECK(svd.singularValues()(0) <=
            data.gamma * std::exp(data.w0 * t) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("deviation check against the Gronwall envelope") {
  const TimeGrid grid(0.0, 1.0, 32);
  SUBCASE("identical initial states pass with zero ratio") {
    const Trajectory a = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                          IntegratorScheme::AffineExponential);
    const auto report = deviation_check(a, a, GronwallData{}, 0.0);
    CHECK(report.pass);
    CHECK(report.max_ratio == doctest::Approx(0.0));
  }
  SUBCASE("bilinear growth stays within C(t)") {
    const Trajectory a = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                          IntegratorScheme::AffineExponential);
    const Trajectory b = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Constant(1, 1.1), grid,
                                          IntegratorScheme::AffineExponential);
    const GronwallData data =
        make_gronwall_data(1.0, 0.0, [](double) { return 1.0; }, grid);
    const auto report = deviation_check(a, b, data, 0.1);
    CHECK(report.pass);
    CHECK(report.max_ratio == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("decay stays within the constant envelope") {
    const GeneratorMatrix gen(Eigen::MatrixXd::Constant(1, 1, -1.0));
    const Trajectory a = propagate(gen, SemilinearTerm::zero(1), Eigen::VectorXd::Zero(1),
                                   OrdinaryControlPath(grid, 0),
                                   IntegerControlPath::constant(grid, 0, 1), grid);
    const Trajectory b = propagate(gen, SemilinearTerm::zero(1), Eigen::VectorXd::Ones(1),
                                   OrdinaryControlPath(grid, 0),
                                   IntegerControlPath::constant(grid, 0, 1), grid);
    const auto report = deviation_check(a, b, GronwallData{1.0, 0.0, {}}, 1.0);
    CHECK(report.pass);
  }
  SUBCASE("zero gap with distinct trajectories is inconsistent") {
    const Trajectory a = propagate_scalar(0.0, 0.0, Eigen::VectorXd::Ones(1), grid,
                                          IntegratorScheme::AffineExponential);
    const Trajectory b = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                          IntegratorScheme::AffineExponential);
    CHECK_THROWS_AS(deviation_check(a, b, GronwallData{}, 0.0), NumericalError);
  }
}

TEST_CASE("refinement order of the discretizing schemes") {
  // Implicit Euler on the stiffness-free decay problem and the generic
  // exponential-Euler corrector on the bilinear problem both show their
  // order: the error shrinks by at least 1.8x per grid halving.
  SUBCASE("implicit Euler on scalar decay") {
    double previous_error = 0.0;
    for (int level = 0; level < 4; ++level) {
      const TimeGrid grid(0.0, 1.0, 8 << level);
      const GeneratorMatrix gen(Eigen::MatrixXd::Constant(1, 1, -1.0));
      Propagator prop(gen, SemilinearTerm::zero(1), grid, 0, 1,
                      IntegratorScheme::ImplicitEuler);
      const Trajectory traj = prop.propagate(Eigen::VectorXd::Ones(1),
                                             OrdinaryControlPath(grid, 0),
                                             IntegerControlPath::constant(grid, 0, 1));
      double error = 0.0;
      for (int i = 0; i < grid.n_nodes(); ++i)
        error = std::max(error, std::abs(traj.states[static_cast<std::size_t>(i)](0) -
                                         oracles::scalar_exponential(1.0, -1.0, grid.node(i))));
      if (level > 0) CHECK(previous_error / error >= 1.8);
      previous_error = error;
    }
  }
  SUBCASE("exponential Euler with corrector on the bilinear problem") {
    double previous_error = 0.0;
    for (int level = 0; level < 4; ++level) {
      const TimeGrid grid(0.0, 1.0, 4 << level);
      const Trajectory traj = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Ones(1), grid,
                                               IntegratorScheme::ExponentialEuler);
      double error = 0.0;
      for (int i = 0; i < grid.n_nodes(); ++i)
        error = std::max(error, std::abs(traj.states[static_cast<std::size_t>(i)](0) -
                                         oracles::scalar_exponential(1.0, 1.0, grid.node(i))));
      if (level > 0) CHECK(previous_error / error >= 1.8);
      previous_error = error;
    }
  }
}

TEST_CASE("a-priori bound holds for propagated trajectories") {
  const TimeGrid grid(0.0, 1.0, 16);
  const GeneratorMatrix gen(Eigen::MatrixXd::Zero(1, 1));
  const GronwallData semigroup = estimate_semigroup_bounds(gen, grid);
  const GronwallData data =
      make_gronwall_data(semigroup.gamma, semigroup.w0, [](double) { return 1.0; }, grid);
  const auto envelope = gronwall_envelope(data, grid);
  for (double y0 : {0.0, 1.0, -2.0}) {
    const Trajectory traj = propagate_scalar(0.0, 1.0, Eigen::VectorXd::Constant(1, y0), grid,
                                             IntegratorScheme::AffineExponential);
    for (int i = 0; i < grid.n_nodes(); ++i)
      CHECK(std::abs(traj.states[static_cast<std::size_t>(i)](0)) <=
            envelope[static_cast<std::size_t>(i)] * (1.0 + std::abs(y0)) +
                10.0 * kIntegratorTolerance);
  }
}
