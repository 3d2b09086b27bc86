#include <catch_amalgamated.hpp>

#include <random>

#include "gaussian_mc.hpp"
#include "liabval/errors.hpp"
#include "liabval/gaussian_model.hpp"
#include "liabval/gaussian_replication.hpp"
#include "liabval/synthetic.hpp"
#include "liabval/valuation.hpp"
#include "oracles.hpp"

using namespace liabval;
using Catch::Matchers::WithinAbs;
using Model = GaussianModel<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace {

Model scalar_model(std::vector<double> a, std::vector<Model::Loading> b, std::vector<double> lambda) {
  std::vector<Vec> av, lv;
  for (double x : a) av.push_back(Vec::Constant(1, x));
  for (double x : lambda) lv.push_back(Vec::Constant(1, x));
  return Model(1, static_cast<int>(a.size()), 0, av, b, lv);
}

Mat m1(double x) { return Mat::Constant(1, 1, x); }

}  // namespace

TEST_CASE("model validation", "[gaussian]") {
  std::vector<Vec> a{Vec::Zero(2)}, l{Vec::Zero(2)};
  CHECK_THROWS_AS(Model(2, 1, 0, a, {{1, 1, Mat::Zero(2, 2)}}, l), ModelError);
  Mat singular(2, 2);
  singular << 1, 2, 2, 4;
  CHECK_THROWS_AS(Model(2, 1, 1, a, {{1, 1, singular}}, l), ModelError);
  CHECK_THROWS_AS(Model(2, 1, 1, a, {{1, 1, Mat::Identity(3, 3)}}, l), ModelError);
  CHECK_THROWS_AS(Model(2, 1, 2, a, {{1, 1, Mat::Identity(2, 2)}}, l), ModelError);
  CHECK_THROWS_AS(Model(2, 1, 1, a, {{1, 1, Mat::Identity(2, 2)}, {2, 1, Mat::Identity(2, 2)}}, l),
                  ModelError);
  CHECK_THROWS_AS(Model(2, 1, 1, {Vec::Zero(3)}, {{1, 1, Mat::Identity(2, 2)}}, l), ModelError);
  // tiny but well-conditioned after row scaling
  CHECK_NOTHROW(Model(2, 1, 1, a, {{1, 1, 1e-8 * Mat::Identity(2, 2)}}, l));
}

TEST_CASE("measure shift", "[gaussian]") {
  auto zero = scalar_model({0.0}, {{1, 1, m1(2.0)}}, {0.0});
  CHECK(measure_shift(zero, 0, 1)[0] == 0.0);
  auto one = scalar_model({0.0}, {{1, 1, m1(1.7)}}, {0.3});
  CHECK_THAT(measure_shift(one, 0, 1)[0], WithinAbs(1.7 * 0.3, 1e-15));
  CHECK_THROWS_AS(measure_shift(one, 1, 1), ArgumentError);
  CHECK_THROWS_AS(measure_shift(one, 0, 2), ArgumentError);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    auto model = random_gaussian_model(rng);
    Exposure<double> g;
    std::normal_distribution<double> z;
    for (int t = 0; t < model.horizon(); ++t) {
      Vec v(model.dimension());
      for (auto& x : v) x = z(rng);
      g.push_back(v);
    }
    for (int t = 0; t < model.horizon(); ++t) {
      // sum_{u>t} (E^Q_t - E^P_t)[X_u] two ways
      double via_shift = 0.0;
      for (int u = t + 1; u <= model.horizon(); ++u) via_shift += g[static_cast<std::size_t>(u - 1)].dot(measure_shift(model, t, u));
      double via_loadings = 0.0;
      for (int s = t + 1; s <= model.horizon(); ++s) {
        for (int u = s; u <= model.horizon(); ++u) {
          via_loadings += g[static_cast<std::size_t>(u - 1)].dot(model.loading(u, s) * model.girsanov(s));
        }
      }
      CHECK_THAT(via_shift, WithinAbs(via_loadings, 1e-12));
    }
  }
}

TEST_CASE("positive part of a normal against Monte Carlo", "[gaussian]") {
  CHECK(positive_part_gaussian(-3.0, 0.0) == 0.0);
  CHECK(positive_part_gaussian(2.0, 0.0) == 2.0);
  CHECK_THROWS_AS(positive_part_gaussian(1.0, -1.0), ArgumentError);

  auto mc0 = oracle::monte_carlo([](double e) { return std::max(0.0, -e); }, 10'000'000, 1);
  CHECK_THAT(positive_part_gaussian(0.0, 1.0), WithinAbs(mc0.mean, 3 * mc0.stderr_));
  CHECK_THAT(positive_part_gaussian(0.0, 1.0), WithinAbs(0.398942, 1e-5));

  const double a = 2.326348;
  auto mc1 = oracle::monte_carlo([a](double e) { return std::max(0.0, a - e); }, 10'000'000, 2);
  CHECK_THAT(positive_part_gaussian(a, 1.0), WithinAbs(mc1.mean, 3 * mc1.stderr_));
  // frozen from adaptive quadrature of (a - e)_+ phi(e)
  CHECK_THAT(positive_part_gaussian(a, 1.0), WithinAbs(2.329736662203458, 1e-10));
}

TEST_CASE("sigma schedule", "[gaussian]") {
  auto model = scalar_model({0.0, 0.0}, {{1, 1, m1(1.0)}, {2, 1, m1(0.5)}, {2, 2, m1(2.0)}}, {0.0, 0.0});
  auto g = constant_exposure(model, Vec::Ones(1));
  auto sigma = sigma_schedule(model, g);
  CHECK_THAT(sigma[0] * sigma[0], WithinAbs(2.25, 1e-14));
  CHECK_THAT(sigma[1] * sigma[1], WithinAbs(4.0, 1e-14));
  auto zero = sigma_schedule(model, constant_exposure(model, Vec::Zero(1)));
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  auto flipped = sigma_schedule(model, constant_exposure(model, Vec(-Vec::Ones(1))));
  CHECK(flipped == sigma);
  CHECK_THROWS_AS(sigma_schedule(model, constant_exposure(model, Vec::Ones(2))), ArgumentError);
}

TEST_CASE("one-period fixture", "[gaussian]") {
  auto model = scalar_model({0.0}, {{1, 1, m1(1.0)}}, {0.0});
  const auto spec = RiskMeasureSpec::value_at_risk(0.01);
  auto res = gaussian_valuation(model, constant_exposure(model, Vec::Ones(1)), r0(spec));
  CHECK_THAT(res.r0(), WithinAbs(2.326348, 1e-6));
  // frozen from quadrature at r0 = Phi^{-1}(0.99)
  CHECK_THAT(res.c0(), WithinAbs(2.3297365375038903, 1e-10));
  CHECK_THAT(res.v0(), WithinAbs(-0.0033886634630495, 1e-10));
  // MC of V_0 = R_0 - E[(R_0 - X_1)_+]
  const double r = oracle::inverse_normal_bisection(0.99);
  auto mc = oracle::monte_carlo([r](double e) { return r - std::max(0.0, r - e); }, 10'000'000, 3);
  CHECK_THAT(res.v0(), WithinAbs(mc.mean, std::max(3 * mc.stderr_, 1e-4)));
}

TEST_CASE("K identities and internal consistency on random models", "[gaussian]") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  const auto spec = RiskMeasureSpec::expected_shortfall(0.05);
  const double r = r0(spec);
  for (int rep = 0; rep < 100; ++rep) {
    auto model = random_gaussian_model(rng);
    Exposure<double> g;
    for (int t = 0; t < model.horizon(); ++t) {
      Vec v(model.dimension());
      for (auto& x : v) x = z(rng);
      g.push_back(v);
    }
    auto res = gaussian_valuation(model, g, r);
    const int T = model.horizon();
    for (int t = 0; t <= T; ++t) {
      double shift = 0.0;
      for (int u = t + 1; u <= T; ++u) shift += g[static_cast<std::size_t>(u - 1)].dot(measure_shift(model, t, u));
      CHECK_THAT(res.k_p[static_cast<std::size_t>(t)] - res.k_q[static_cast<std::size_t>(t)], WithinAbs(shift, 1e-12));
    }
    // C_t = rho_t(-X_{t+1} - V_{t+1}) - V_t with everything at a random history
    Mat shocks(model.dimension(), T);
    for (auto& x : shocks.reshaped()) x = z(rng);
    for (int t = 0; t < T; ++t) {
      double vt = conditional_mean(model, g, t, shocks, Measure::Q) + res.k_q[static_cast<std::size_t>(t)];
      // Y = X_{t+1} + V_{t+1} = E^Q_{t+1}[sum_{s>t} X_s] + K^Q_{t+1}; P-mean and sd given t
      double mean_p = 0.0;
      {
        // E^P_t[E^Q_{t+1}[sum_{s>t} X_s]] = E^P_t[sum] + sum_{s>t} g_s^T sum_{u=t+2}^s B_{s,u} lambda_u
        mean_p = conditional_mean(model, g, t, shocks, Measure::P);
        for (int s = t + 2; s <= T; ++s) mean_p += g[static_cast<std::size_t>(s - 1)].dot(measure_shift(model, t + 1, s));
      }
      double rho_y = mean_p + res.k_q[static_cast<std::size_t>(t + 1)] + res.sigma[static_cast<std::size_t>(t + 1)] * r;
      CHECK_THAT(res.c[static_cast<std::size_t>(t)], WithinAbs(rho_y - vt, 1e-12));
    }
  }
}

TEST_CASE("no Girsanov shift means equal K sequences", "[gaussian]") {
  std::mt19937_64 rng(13);
  RandomModelOptions opt;
  opt.girsanov_scale = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    auto model = random_gaussian_model(rng, opt);
    Vec g = Vec::Ones(model.dimension());
    auto res = gaussian_valuation(model, constant_exposure(model, g), r0(RiskMeasureSpec::value_at_risk(0.05)));
    for (std::size_t t = 0; t < res.k_q.size(); ++t) CHECK(res.k_q[t] == res.k_p[t]);
  }
}

TEST_CASE("block-diagonal models match the independent-period closed form", "[gaussian]") {
  std::mt19937_64 rng(19);
  RandomModelOptions opt;
  opt.block_diagonal = true;
  std::normal_distribution<double> z;
  for (const auto& spec : {RiskMeasureSpec::value_at_risk(0.01), RiskMeasureSpec::expected_shortfall(0.1)}) {
    for (int rep = 0; rep < 25; ++rep) {
      auto model = random_gaussian_model(rng, opt);
      Vec g(model.dimension());
      for (auto& x : g) x = z(rng);
      auto res = gaussian_valuation(model, constant_exposure(model, g), r0(spec));
      std::vector<NormalPeriodLaw> laws;
      for (int t = 1; t <= model.horizon(); ++t) {
        double mp = g.dot(model.drift(t));
        double shift = g.dot(model.loading(t, t) * model.girsanov(t));
        laws.push_back({mp, mp + shift, (model.loading(t, t).transpose() * g).norm()});
      }
      auto iid = iid_closed_form(laws, spec);
      for (std::size_t t = 0; t < iid.v.size(); ++t) {
        CHECK_THAT(res.expected_v(t), WithinAbs(iid.v[t], 1e-10));
        CHECK_THAT(res.c[t], WithinAbs(iid.c[t], 1e-10));
        CHECK_THAT(res.expected_r(t), WithinAbs(iid.r[t], 1e-10));
      }
    }
  }
}

TEST_CASE("closed form agrees with a Monte Carlo of the recursion", "[gaussian]") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z;
  const auto spec = RiskMeasureSpec::value_at_risk(0.05);
  for (int rep = 0; rep < 4; ++rep) {
    auto model = random_gaussian_model(rng);
    Exposure<double> g;
    for (int t = 0; t < model.horizon(); ++t) {
      Vec v(model.dimension());
      for (auto& x : v) x = z(rng);
      g.push_back(v);
    }
    auto res = gaussian_valuation(model, g, r0(spec));
    auto mc = oracle::gaussian_recursion_mc(model, g, oracle::inverse_normal_bisection(0.95), 200'000, 100 + rep);
    CHECK(std::abs(res.v0() - mc.v0) <= 3.0 * mc.v0_stderr + 1e-12);
  }
}

TEST_CASE("eta is nonnegative under the sign condition", "[gaussian]") {
  std::mt19937_64 rng(29);
  for (int rep = 0; rep < 50; ++rep) {
    auto model = random_gaussian_model(rng);
    Vec g = Vec::Ones(model.dimension());
    auto res = gaussian_valuation(model, constant_exposure(model, g), r0(RiskMeasureSpec::value_at_risk(0.1)));
    const double r = r0(RiskMeasureSpec::value_at_risk(0.1));
    for (int t = 0; t < model.horizon(); ++t) {
      double sigma = res.sigma[static_cast<std::size_t>(t + 1)];
      double drift = res.drift[static_cast<std::size_t>(t + 1)];
      double p_part = positive_part_gaussian(sigma * r, sigma);
      if (p_part == 0.0) continue;
      double eta = p_part / res.c[static_cast<std::size_t>(t)] - 1.0;
      if (drift >= 0.0) CHECK(eta >= -1e-12);
    }
  }
}

TEST_CASE("optimal static replication", "[gaussian]") {
  const auto spec = RiskMeasureSpec::value_at_risk(0.01);
  SECTION("a near copy of the liability replicates it in the limit") {
    // An exact copy would make B_{T,T} singular, which the model rejects.
    Mat exact(2, 2);
    exact << 1.0, 0.0, 1.0, 0.0;
    CHECK_THROWS_AS(Model(2, 1, 1, {Vec::Zero(2)}, {{1, 1, exact}}, {Vec::Zero(2)}), ModelError);
    const double delta = 1e-6;
    Mat b(2, 2);
    b << 1.0, 0.0, 1.0, delta;
    Vec a(2);
    a << 0.4, 0.4;
    Vec lambda(2);
    lambda << 0.3, -0.2;
    Model model(2, 1, 1, {a}, {{1, 1, b}}, {lambda});
    auto rep = optimal_replication_g(model, spec);
    CHECK_THAT(rep.v_hat[0], WithinAbs(1.0, 1e-4));
    CHECK(rep.objective <= 1e-5);
    CHECK_THAT(rep.l0, WithinAbs(a[0] + (b * lambda)[0], 1e-5));
  }
  SECTION("hedge ratio 0.8") {
    Mat b(2, 2);
    b << 1.0, 0.0, 0.8, 0.6;
    Model model(2, 1, 1, {Vec::Zero(2)}, {{1, 1, b}}, {Vec::Zero(2)});
    auto rep = optimal_replication_g(model, spec);
    CHECK_THAT(rep.v_hat[0], WithinAbs(0.8, 1e-6));
    // grid oracle
    double best_v = 0.0, best_f = 1e300;
    for (int k = -2000; k <= 2000; ++k) {
      double v = k * 1e-3;
      Vec g(2);
      g << 1.0, -v;
      double f = replication_objective(model, g, r0(spec));
      if (f < best_f) {
        best_f = f;
        best_v = v;
      }
    }
    CHECK_THAT(rep.v_hat[0], WithinAbs(best_v, 1e-3));
    CHECK(rep.objective <= best_f + 1e-12);
  }
  SECTION("independent instrument is not used") {
    Model model(2, 1, 1, {Vec::Zero(2)}, {{1, 1, Mat::Identity(2, 2)}}, {Vec::Zero(2)});
    auto rep = optimal_replication_g(model, spec);
    CHECK_THAT(rep.v_hat[0], WithinAbs(0.0, 1e-6));
  }
  SECTION("market consistency under replicable shifts") {
    std::mt19937_64 rng(31);
    RandomModelOptions opt;
    opt.max_dimension = 3;
    opt.instruments = 1;
    for (int rep_i = 0; rep_i < 5; ++rep_i) {
      Model model = random_gaussian_model(rng, opt);
      while (model.dimension() < 2) model = random_gaussian_model(rng, opt);
      auto base = optimal_replication_g(model, spec);
      // X^o + 0.7 X^f: shift row 0 of A and B by 0.7 times row 1
      const double vy = 0.7;
      std::vector<Vec> a, l;
      std::vector<Model::Loading> loads;
      for (int t = 1; t <= model.horizon(); ++t) {
        Vec at = model.drift(t);
        at[0] += vy * at[1];
        a.push_back(at);
        l.push_back(model.girsanov(t));
        for (int s = 1; s <= t; ++s) {
          Mat b = model.loading(t, s);
          b.row(0) += vy * b.row(1);
          loads.push_back({t, s, b});
        }
      }
      Model shifted(model.dimension(), model.horizon(), model.instruments(), a, loads, l);
      auto moved = optimal_replication_g(shifted, spec);
      CHECK_THAT(moved.v_hat[0], WithinAbs(base.v_hat[0] + vy, 1e-6));
      CHECK_THAT(moved.objective, WithinAbs(base.objective, 1e-8));
      double price = 0.0;
      for (int t = 1; t <= model.horizon(); ++t) price += vy * (model.drift(t)[1] + measure_shift(model, 0, t)[1]);
      CHECK_THAT(moved.l0, WithinAbs(base.l0 + price, 1e-8));
    }
  }
  SECTION("requires an instrument") {
    Model model(1, 1, 0, {Vec::Zero(1)}, {{1, 1, Mat::Identity(1, 1)}}, {Vec::Zero(1)});
    CHECK_THROWS_AS(optimal_replication_g(model, spec), ArgumentError);
  }
}
