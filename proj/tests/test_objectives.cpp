#include "dualmem/objectives.hpp"

#include <doctest.h>

#include <limits>
#include <utility>

using namespace dualmem;

namespace {

PointMap cloud_of(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix pts(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (const double v : r) pts(i, j++) = v;
    ++i;
  }
  return PointMap::from_points(std::move(pts));
}

PointMap random_cloud(uint64_t seed, int n) {
  Rng rng(seed);
  PointMap pm = PointMap::from_points(gaussian_matrix(rng, n, 3, 1.0));
  for (int i = 0; i < n; ++i) pm.confidence(i) = 0.2 + rng.uniform();
  return pm;
}

}  // namespace

TEST_CASE("scale_norm: arithmetic, sphere, duplication invariance") {
  CHECK(scale_norm(cloud_of({{3, 4, 0}})) == 5.0);

  PointMap sphere = cloud_of({{1, 0, 0}, {0, 1, 0}, {0, 0, -1}, {-1, 0, 0}});
  CHECK(scale_norm(sphere) == doctest::Approx(1.0).epsilon(1e-15));

  PointMap once = random_cloud(3, 10);
  Matrix doubled(20, 3);
  doubled << once.points, once.points;
  CHECK(scale_norm(PointMap::from_points(doubled)) ==
        doctest::Approx(scale_norm(once)).epsilon(1e-12));
}

TEST_CASE("scale_norm: degenerate inputs throw") {
  CHECK_THROWS_AS(scale_norm(cloud_of({{0, 0, 0}, {0, 0, 0}})), ContractError);
  PointMap none = cloud_of({{1, 2, 3}});
  none.valid[0] = false;
  CHECK_THROWS_AS(scale_norm(none), ContractError);
}

TEST_CASE("conf_regression_loss: perfect prediction with unit confidence is zero") {
  const PointMap target = random_cloud(5, 12);
  PointMap pred = target;
  pred.confidence.setOnes();
  CHECK(conf_regression_loss(pred, target, 0.2) == 0.0);
}

TEST_CASE("conf_regression_loss: scaled prediction leaves only the confidence term") {
  const PointMap target = random_cloud(7, 9);
  PointMap pred = target;
  pred.points *= 2.0;
  double expect = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) expect += -0.2 * std::log(pred.confidence(i));
  CHECK(conf_regression_loss(pred, target, 0.2) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("conf_regression_loss: single-point arithmetic") {
  PointMap target = cloud_of({{1, 0, 0}});
  PointMap pred = cloud_of({{0, 1, 0}});
  pred.confidence(0) = std::exp(1.0);
  // both normalize to unit scale; residual = ||(0,1,0) - (1,0,0)|| = sqrt(2)
  const double r = std::sqrt(2.0);
  CHECK(conf_regression_loss(pred, target, 0.2) ==
        doctest::Approx(std::exp(1.0) * r - 0.2).epsilon(1e-12));
}

TEST_CASE("conf_regression_loss: non-negative at unit confidence, zero iff shapes coincide") {
  Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    PointMap target = random_cloud(100 + static_cast<uint64_t>(trial), 10);
    PointMap pred = random_cloud(200 + static_cast<uint64_t>(trial), 10);
    pred.confidence.setOnes();
    target.confidence.setOnes();
    CHECK(conf_regression_loss(pred, target, 0.2) >= 0.0);
    CHECK(conf_regression_loss(pred, target, 0.2) > 0.0);  // distinct random shapes

    // any global rescaling of the same shape reaches exactly zero residual
    PointMap rescaled = target;
    rescaled.points *= 0.5 + rng.uniform();
    CHECK(conf_regression_loss(rescaled, target, 0.2) ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("conf_regression_loss: global scale invariance") {
  const PointMap target = random_cloud(11, 15);
  const PointMap pred = random_cloud(12, 15);
  const double base = conf_regression_loss(pred, target, 0.2);
  for (const auto& [k, m] : {std::pair{3.7, 0.2}, std::pair{0.01, 42.0}}) {
    PointMap p = pred;
    PointMap t = target;
    p.points *= k;
    t.points *= m;
    CHECK(conf_regression_loss(p, t, 0.2) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("conf_regression_loss: masks intersect, bad confidence rejected") {
  PointMap target = random_cloud(13, 6);
  PointMap pred = random_cloud(14, 6);
  pred.valid[0] = false;
  target.valid[5] = false;

  // build the expected value over indices 1..4 with a reduced map
  Matrix pp(4, 3), tp(4, 3);
  Vector pc(4);
  for (int i = 1; i <= 4; ++i) {
    pp.row(i - 1) = pred.points.row(i);
    tp.row(i - 1) = target.points.row(i);
    pc(i - 1) = pred.confidence(i);
  }
  PointMap small_pred = PointMap::from_points(pp);
  small_pred.confidence = pc;
  const PointMap small_target = PointMap::from_points(tp);
  CHECK(conf_regression_loss(pred, target, 0.2) ==
        doctest::Approx(conf_regression_loss(small_pred, small_target, 0.2)).epsilon(1e-12));

  pred.confidence(2) = 0.0;
  CHECK_THROWS_AS(conf_regression_loss(pred, target, 0.2), ContractError);
}

TEST_CASE("conf_regression_loss: confidence gradient crosses zero at beta over residual") {
  // single point, scalar case: d/dc (c*r - beta*log c) = r - beta/c
  const double beta = 0.2;
  PointMap target = cloud_of({{1, 0, 0}});
  PointMap pred = cloud_of({{0, 1, 0}});
  const double r = std::sqrt(2.0);

  auto loss_at = [&](double c) {
    PointMap p = pred;
    p.confidence(0) = c;
    return conf_regression_loss(p, target, beta);
  };
  const double c_star = beta / r;
  const double h = 1e-6;
  const double grad_at_cstar = (loss_at(c_star + h) - loss_at(c_star - h)) / (2 * h);
  CHECK(grad_at_cstar == doctest::Approx(0.0).epsilon(1e-6));
  const double grad_above = (loss_at(2 * c_star + h) - loss_at(2 * c_star - h)) / (2 * h);
  CHECK(grad_above == doctest::Approx(r - beta / (2 * c_star)).epsilon(1e-6));
}

TEST_CASE("loss_3d: sum of the two confidence losses, symmetric under pair swap") {
  const PointMap ps = random_cloud(21, 8), ts = random_cloud(22, 8);
  const PointMap pw = random_cloud(23, 8), tw = random_cloud(24, 8);
  const double total = loss_3d(ps, ts, pw, tw, 0.2);
  CHECK(total == doctest::Approx(conf_regression_loss(ps, ts, 0.2) +
                                 conf_regression_loss(pw, tw, 0.2)).epsilon(1e-12));
  CHECK(loss_3d(pw, tw, ps, ts, 0.2) == doctest::Approx(total).epsilon(1e-12));

  PointMap perfect_s = ts, perfect_w = tw;
  perfect_s.confidence.setOnes();
  perfect_w.confidence.setOnes();
  PointMap ts1 = ts, tw1 = tw;
  CHECK(loss_3d(perfect_s, ts1, perfect_w, tw1, 0.2) == 0.0);
}

TEST_CASE("pose_loss: identities and quaternion distance") {
  PoseTarget a;
  a.quaternion << 1, 0, 0, 0;
  a.translation << 1, 2, 3;
  a.scale = 2.0;
  CHECK(pose_loss({a}, {a}) == 0.0);

  PoseTarget b = a;
  b.quaternion << 0, 1, 0, 0;
  CHECK(pose_loss({a}, {b}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  // doubled translation with doubled scale cancels
  PoseTarget c = a;
  c.translation *= 2.0;
  c.scale = 2.0 * a.scale;
  CHECK(pose_loss({c}, {a}) == doctest::Approx(0.0).epsilon(1e-15));

  CHECK_THROWS_AS(pose_loss({a, b}, {a}), ContractError);
  CHECK_THROWS_AS(pose_loss({}, {}), ContractError);
}

TEST_CASE("pose_loss: hemisphere canonicalization flag") {
  PoseTarget target;
  target.quaternion << 1, 0, 0, 0;
  PoseTarget flipped = target;
  flipped.quaternion = -target.quaternion;

  CHECK(pose_loss({flipped}, {target}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(pose_loss({flipped}, {target}, /*canonicalize_hemisphere=*/true) == 0.0);
}

TEST_CASE("rgb_loss: identities and homogeneity") {
  Rng rng(31);
  const Matrix img = gaussian_matrix(rng, 6, 7, 1.0);
  CHECK(rgb_loss(img, img) == 0.0);

  Matrix one = Matrix::Zero(2, 2), other = Matrix::Zero(2, 2);
  other(1, 0) = 3.0;
  CHECK(rgb_loss(one, other) == 9.0);

  const Matrix a = gaussian_matrix(rng, 4, 4, 1.0);
  const Matrix b = gaussian_matrix(rng, 4, 4, 1.0);
  const double base = rgb_loss(a, b);
  const double k = 2.5;
  CHECK(rgb_loss(Matrix(k * (a - b) + b), b) == doctest::Approx(k * k * base).epsilon(1e-12));

  CHECK_THROWS_AS(rgb_loss(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), ContractError);
}

TEST_CASE("total_loss: raymap indicator") {
  CHECK(total_loss(1.5, 2.0, 100.0, false) == 3.5);
  CHECK(total_loss(1.0, 1.0, 1.0, true) == 3.0);
  Rng rng(32);
  for (int i = 0; i < 20; ++i) {
    const double l3d = rng.normal(), lp = rng.normal(), lr = rng.normal();
    CHECK(total_loss(l3d, lp, lr, true) == l3d + lp + lr);
    CHECK(total_loss(l3d, lp, lr, false) == l3d + lp);
  }
  CHECK_THROWS_AS(total_loss(std::numeric_limits<double>::infinity(), 0, 0, false),
                  ContractError);
}
