#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "pqobs/diagnostics.hpp"
#include "pqobs/energy.hpp"
#include "pqobs/errors.hpp"
#include "pqobs/grid.hpp"
#include "pqobs/penalty.hpp"

using namespace pqobs;

namespace {

Integrand power(double p) {
  GrowthParams g;
  g.p = g.q = p;
  return Integrand::p_power(g);
}

ObstacleProblem free_problem(const Grid& grid, const Integrand& f, const Field& g, double psi_value = -1.0) {
  return ObstacleProblem(f, Field(grid, g.components(), psi_value), g);
}

}  // namespace

TEST(Grid, Geometry) {
  const Grid g(Box::rectangle(0, 2, -1, 1), 5, 3);
  EXPECT_EQ(g.node_count(), 15);
  EXPECT_EQ(g.element_count(), 16);
  EXPECT_DOUBLE_EQ(g.h(0), 0.5);
  EXPECT_DOUBLE_EQ(g.h(1), 1.0);
  EXPECT_DOUBLE_EQ(g.element_count() * g.element_measure(), 4.0);
  double w = 0.0;
  for (double v : g.lumped_weights()) w += v;
  EXPECT_NEAR(w, 4.0, 1e-14);
  EXPECT_EQ(g.node_point(14)[0], 2.0);
  EXPECT_EQ(g.node_point(14)[1], 1.0);

  int boundary = 0;
  for (int k = 0; k < g.node_count(); ++k) boundary += g.is_boundary(k);
  EXPECT_EQ(boundary, 12);  // only the 3 middle nodes of the middle row are interior
}

TEST(Grid, ShiftedElements) {
  const Grid g = Grid::square(0, 1, 4);
  EXPECT_EQ(g.shifted_element(0, 1, 0), 2);
  EXPECT_EQ(g.shifted_element(1, 0, 1), 7);
  EXPECT_EQ(g.shifted_element(0, -1, 0), -1);
  EXPECT_EQ(g.shifted_element(g.element_count() - 1, 0, 1), -1);
}

TEST(Gradient, AffineFieldsAreExact) {
  const Grid g(Box::rectangle(-1, 2, 0, 3), 7, 5);
  const Field x = sample(g, [](const Point& p) { return p[0]; });
  const Field xy = sample(g, [](const Point& p) { return p[0] + 2 * p[1]; });
  const Field c = sample(g, [](const Point&) { return 4.2; });
  const ElementField gx = gradient(x), gxy = gradient(xy), gc = gradient(c);
  for (int e = 0; e < g.element_count(); ++e) {
    EXPECT_NEAR(gx.at(e)(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(gx.at(e)(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(gxy.at(e)(0, 0), 1.0, 1e-13);
    EXPECT_NEAR(gxy.at(e)(0, 1), 2.0, 1e-13);
    EXPECT_EQ(gc.at(e).norm2(), 0.0);
  }
}

TEST(Gradient, VectorFieldRows) {
  const Grid g = Grid::line(0, 1, 5);
  const Field u = sample(g, 2, [](const Point& p, int r) { return r == 0 ? 3 * p[0] : -p[0]; });
  const ElementField du = gradient(u);
  EXPECT_EQ(du.rows, 2);
  EXPECT_EQ(du.cols, 1);
  EXPECT_NEAR(du.at(2)(0, 0), 3.0, 1e-14);
  EXPECT_NEAR(du.at(2)(1, 0), -1.0, 1e-14);
}

TEST(Energy, QuadraticOfLinearField) {
  const Grid g = Grid::square(0, 1, 9);
  const Field u = sample(g, [](const Point& p) { return p[0]; });
  const ObstacleProblem prob = free_problem(g, power(2), u);
  EXPECT_NEAR(integrate_energy(prob, u, EnergyParams{}), 1.0, 1e-14);
}

TEST(Energy, QuarticOfDiagonalField) {
  const Grid g = Grid::square(0, 1, 9);
  const Field u = sample(g, [](const Point& p) { return p[0] + p[1]; });
  const ObstacleProblem prob = free_problem(g, power(4), u);
  EXPECT_NEAR(integrate_energy(prob, u, EnergyParams{}), 4.0, 1e-13);
}

TEST(Energy, PenaltyOnlyForZeroField) {
  const Grid g = Grid::square(0, 1, 9);
  const ObstacleProblem prob = free_problem(g, power(2), Field(g, 1));
  const double kappa = 3.0, delta = 0.25;
  const double expected = kappa * h_delta(h_delta(-1.0, delta), delta);
  EXPECT_NEAR(integrate_energy(prob, Field(g, 1), EnergyParams{0.0, kappa, delta}), expected, 1e-14);
}

TEST(Energy, RejectsDirichletViolationAndShapeMismatch) {
  const Grid g = Grid::square(0, 1, 5);
  const ObstacleProblem prob = free_problem(g, power(2), Field(g, 1));
  EXPECT_THROW(integrate_energy(prob, Field(g, 1, 1.0), EnergyParams{}), PreconditionError);
  EXPECT_THROW(integrate_energy(prob, Field(Grid::square(0, 1, 6), 1), EnergyParams{}), ShapeError);
  EXPECT_THROW(ObstacleProblem(power(2), Field(g, 1), Field(g, 2)), ShapeError);
  EXPECT_THROW(ObstacleProblem(power(2), Field(g, 1, 1.0), Field(g, 1)), PreconditionError);
}

TEST(Energy, QuadratureConvergesAtSecondOrder) {
  // Dirichlet energy of sin(pi x) sin(pi y) on the unit square is pi^2 / 2.
  const double exact = std::numbers::pi * std::numbers::pi / 2;
  std::vector<double> h, err;
  for (int m : {9, 17, 33, 65}) {
    const Grid g = Grid::square(0, 1, m);
    const Field u = sample(g, [](const Point& p) { return std::sin(std::numbers::pi * p[0]) * std::sin(std::numbers::pi * p[1]); });
    const ObstacleProblem prob = free_problem(g, power(2), Field(g, 1), -10.0);
    Field pinned = u;
    for (int k = 0; k < g.node_count(); ++k) {
      if (g.is_boundary(k)) pinned(k) = 0.0;
    }
    h.push_back(g.h(0));
    err.push_back(std::abs(integrate_energy(prob, pinned, EnergyParams{}) - exact));
  }
  EXPECT_GE(fit_loglog_slope(h, err), 1.8);
}

TEST(Norms, Basics) {
  const Grid g = Grid::square(0, 1, 11);
  const Field one(g, 1, 1.0);
  for (double t : {1.0, 2.0, 3.5}) EXPECT_NEAR(lp_norm(one, t), 1.0, 1e-14);
  EXPECT_NEAR(lp_norm(gradient(sample(g, [](const Point& p) { return p[0]; })), 2.0), 1.0, 1e-14);
  EXPECT_THROW(lp_norm(one, 0.5), DomainError);
  EXPECT_THROW(lp_norm(gradient(one), 0.9), DomainError);
  EXPECT_NEAR(w1q_norm(sample(g, [](const Point& p) { return p[0] + 1; }), 2.0),
              lp_norm(sample(g, [](const Point& p) { return p[0] + 1; }), 2.0) + 1.0, 1e-14);
}

TEST(Transfer, RestrictAfterProlongIsIdentity) {
  const Grid coarse(Box::rectangle(0, 1, 0, 2), 5, 9);
  const Grid fine(Box::rectangle(0, 1, 0, 2), 17, 33);
  ASSERT_TRUE(nested(coarse, fine));
  EXPECT_FALSE(nested(coarse, Grid(Box::rectangle(0, 1, 0, 2), 6, 9)));
  const Field u = sample(coarse, 2, [](const Point& p, int r) { return std::cos(3 * p[0] + r) * p[1]; });
  const Field back = restrict_to(prolong(u, fine), coarse);
  for (std::size_t k = 0; k < u.size(); ++k) EXPECT_EQ(back.values()[k], u.values()[k]);
}

TEST(Transfer, ProlongReproducesAffine) {
  const Grid coarse = Grid::square(0, 1, 5), fine = Grid::square(0, 1, 17);
  const Field u = sample(coarse, [](const Point& p) { return 2 * p[0] - p[1] + 0.5; });
  const Field f = prolong(u, fine);
  for (int k = 0; k < fine.node_count(); ++k) {
    const Point x = fine.node_point(k);
    EXPECT_NEAR(f(k), 2 * x[0] - x[1] + 0.5, 1e-14);
  }
  EXPECT_NEAR(interpolate(u, {0.3, 0.7}), 0.6 - 0.7 + 0.5, 1e-14);
}

TEST(FieldIo, RoundTripIsExact) {
  const Grid g(Box::rectangle(-1, 1, 0, 0.3), 7, 4);
  const Field u = sample(g, 2, [](const Point& p, int r) { return std::exp(p[0]) / 3 + r * p[1]; });
  std::stringstream buf;
  write_field(buf, u, {"provenance line", "second"});
  const std::string text = buf.str();
  EXPECT_EQ(text.rfind("# provenance line", 0), 0u);
  const Field v = read_field(buf);
  ASSERT_TRUE(v.same_shape(u));
  EXPECT_EQ(v.values(), u.values());
}

TEST(FieldIo, OneDimensionalAndMalformed) {
  const Field u = sample(Grid::line(-1, 1, 9), [](const Point& p) { return p[0] * p[0]; });
  std::stringstream buf;
  write_field(buf, u);
  EXPECT_EQ(buf.str().substr(0, 17), "pqfield 1 9 1\n-1 ");
  EXPECT_EQ(read_field(buf).values(), u.values());

  std::stringstream bad("pqfield 2 3 3 1\n0 0 1\n");
  EXPECT_ANY_THROW(read_field(bad));
}
