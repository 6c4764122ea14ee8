#include <doctest.h>

#include <cmath>
#include <random>

#include "rollnet/bptt.hpp"
#include "test_util.hpp"

using namespace rollnet;

namespace {

NetworkConfig small(int in, int blocks, int out) {
  NetworkConfig c;
  c.num_inputs = in;
  c.num_blocks = blocks;
  c.num_outputs = out;
  return c;
}

Frames binary_targets(std::mt19937_64& gen, int rows, int cols) {
  Frames t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = test_util::uniform(gen) < 0.5 ? 0.0 : 1.0;
  return t;
}

}  // namespace

TEST_CASE("backward: zero residual gives zero gradient") {
  std::mt19937_64 gen(3);
  const NetworkParams p = test_util::random_params(gen, small(3, 4, 3), 0.8);
  const Frames x = test_util::random_frames(gen, 6, 3);
  const ForwardTrace trace = forward_sequence(p, x);
  const GradientSet g = backward(p, trace, trace.predictions());
  for (double v : g.values()) CHECK(v == 0.0);

  // Any nonzero residual in generic position moves something.
  Frames targets = trace.predictions();
  targets(2, 1) += 0.3;
  const GradientSet moved = backward(p, trace, targets);
  double largest = 0.0;
  for (double v : moved.values()) largest = std::max(largest, std::abs(v));
  CHECK(largest > 1e-6);
}

TEST_CASE("backward: scalar single-step network in closed form") {
  NetworkParams p(small(1, 1, 1));
  p.input_weights(Gate::input)(0, 0) = 0.4;
  p.input_weights(Gate::forget)(0, 0) = 0.7;
  p.input_weights(Gate::output)(0, 0) = -0.6;
  p.input_weights(Gate::cell)(0, 0) = 0.9;
  p.bias(Gate::input)[0] = 0.1;
  p.bias(Gate::forget)[0] = 1.0;
  p.bias(Gate::output)[0] = 0.2;
  p.bias(Gate::cell)[0] = -0.3;
  p.output_weights()(0, 0) = 1.7;
  p.output_bias()[0] = -0.4;
  const double x = 0.8, target = 1.0;

  // Feed-forward gated unit: c = i*g (previous state is zero), h = o*tanh(c).
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double i = sig(0.4 * x + 0.1), o = sig(-0.6 * x + 0.2);
  const double g = std::tanh(0.9 * x - 0.3);
  const double c = i * g, h = o * std::tanh(c);
  const double y = sig(1.7 * h - 0.4);
  const double dz = 2.0 * (y - target) * y * (1.0 - y);
  const double dh = 1.7 * dz;
  const double dc = dh * o * (1.0 - std::tanh(c) * std::tanh(c));
  const double d_o = dh * std::tanh(c) * o * (1.0 - o);
  const double d_i = dc * g * i * (1.0 - i);
  const double d_g = dc * i * (1.0 - g * g);

  const GradientSet grad =
      backward(p, forward_sequence(p, Frames::Constant(1, 1, x)), Frames::Constant(1, 1, target));
  auto near = [](double a, double b) { return doctest::Approx(b).epsilon(1e-13).scale(1.0) == a; };
  CHECK(near(grad.output_weights()(0, 0), dz * h));
  CHECK(near(grad.output_bias()[0], dz));
  CHECK(near(grad.input_weights(Gate::output)(0, 0), d_o * x));
  CHECK(near(grad.bias(Gate::output)[0], d_o));
  CHECK(near(grad.input_weights(Gate::input)(0, 0), d_i * x));
  CHECK(near(grad.bias(Gate::input)[0], d_i));
  CHECK(near(grad.input_weights(Gate::cell)(0, 0), d_g * x));
  CHECK(near(grad.bias(Gate::cell)[0], d_g));
  // Forget gate multiplies a zero previous state; recurrent weights see h(-1) = 0.
  CHECK(grad.input_weights(Gate::forget)(0, 0) == 0.0);
  CHECK(grad.bias(Gate::forget)[0] == 0.0);
  for (int k = 0; k < kGateCount; ++k) CHECK(grad.recurrent_weights(Gate(k))(0, 0) == 0.0);
}

TEST_CASE("backward agrees with central differences") {
  std::mt19937_64 gen(2718);
  for (int trial = 0; trial < 8; ++trial) {
    const NetworkConfig c = trial == 0 ? small(2, 3, 2) : small(1 + trial % 4, 1 + (trial * 3) % 5, 1 + trial % 3);
    const int steps = trial == 0 ? 5 : 2 + trial;
    const NetworkParams p = test_util::random_params(gen, c, 0.7);
    const Frames x = test_util::random_frames(gen, steps, c.num_inputs);
    const Frames t = binary_targets(gen, steps, c.num_outputs);
    const GradientSet analytic = backward(p, forward_sequence(p, x), t);
    const GradientSet numeric = finite_diff_gradient(p, x, t, 1e-5);
    const GradientComparison cmp = compare_gradients(analytic, numeric);
    INFO("trial " << trial << " worst " << parameter_name(c, cmp.worst_index));
    CHECK(cmp.max_relative_error < 1e-6);
  }
}

TEST_CASE("backward: loss scale scales every entry") {
  std::mt19937_64 gen(8);
  const NetworkParams p = test_util::random_params(gen, small(3, 3, 2), 0.6);
  const Frames x = test_util::random_frames(gen, 7, 3);
  const Frames t = binary_targets(gen, 7, 2);
  const ForwardTrace trace = forward_sequence(p, x);
  const GradientSet base = backward(p, trace, t);
  BackwardOptions scaled;
  scaled.loss_scale = 2.5;
  const GradientSet big = backward(p, trace, t, scaled);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(big[i] == doctest::Approx(2.5 * base[i]).epsilon(1e-12).scale(0));
}

TEST_CASE("backward: truncated gradient matches a detached-state oracle") {
  std::mt19937_64 gen(31);
  const NetworkConfig c = small(2, 3, 2);
  const NetworkParams p = test_util::random_params(gen, c, 0.8);
  const int steps = 9, window = 4;
  const Frames x = test_util::random_frames(gen, steps, 2);
  const Frames t = binary_targets(gen, steps, 2);
  const ForwardTrace base = forward_sequence(p, x);

  // Loss where each window restarts from the state the unperturbed forward
  // pass reached, held constant.
  auto windowed_loss = [&](std::span<const double> values) {
    NetworkParams q(c);
    std::copy(values.begin(), values.end(), q.values().begin());
    double sq = 0.0;
    for (int start = 0; start < steps; start += window) {
      StepState s = start == 0 ? StepState::zeros(3) : base.steps[start - 1].state();
      for (int k = start; k < std::min(steps, start + window); ++k) {
        const StepRecord r = forward_step(q, x.row(k).transpose(), s);
        sq += (r.prediction - t.row(k).transpose()).squaredNorm();
        s = r.state();
      }
    }
    return sq / double(t.size());
  };
  const std::vector<double> numeric = central_difference(windowed_loss, p.values(), 1e-5);
  GradientSet oracle(c);
  std::copy(numeric.begin(), numeric.end(), oracle.values().begin());

  BackwardOptions opts;
  opts.truncation_window = window;
  const GradientSet truncated = backward(p, base, t, opts);
  CHECK(compare_gradients(truncated, oracle).max_relative_error < 1e-6);

  const GradientSet full = backward(p, base, t);
  CHECK(compare_gradients(truncated, full).max_relative_error > 1e-3);

  opts.truncation_window = steps;
  CHECK(backward(p, base, t, opts) == full);
}

TEST_CASE("backward: errors") {
  std::mt19937_64 gen(4);
  const NetworkParams p = test_util::random_params(gen, small(2, 2, 2), 0.5);
  const ForwardTrace trace = forward_sequence(p, test_util::random_frames(gen, 4, 2));
  CHECK_THROWS_AS(backward(p, trace, Frames::Zero(3, 2)), LengthMismatch);
  CHECK_THROWS_AS(backward(p, trace, Frames::Zero(4, 3)), ShapeMismatch);
}

TEST_CASE("accumulate") {
  std::mt19937_64 gen(12);
  const NetworkConfig c = small(2, 3, 2);
  GradientSet g(c), zero(c);
  for (double& v : g.values()) v = test_util::uniform(gen) - 0.5;

  CHECK(accumulate(std::vector{g, zero}) == g);
  const GradientSet twice = accumulate(std::vector{g, g});
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(twice[i] == 2.0 * g[i]);

  std::vector<GradientSet> three(3, GradientSet(c));
  for (auto& s : three)
    for (double& v : s.values()) v = test_util::uniform(gen) * 1e3 - 500.0;
  CHECK(accumulate(three) == accumulate(three));

  CHECK_THROWS_AS(accumulate(std::vector{g, GradientSet(small(2, 2, 2))}), ShapeMismatch);
  CHECK_THROWS_AS(accumulate(std::span<const GradientSet>{}), ShapeMismatch);
}

TEST_CASE("central differences") {
  SUBCASE("quadratic") {
    auto square = [](std::span<const double> w) { return w[0] * w[0]; };
    const std::vector<double> point = {3.0};
    CHECK(central_difference(square, point, 1e-5)[0] == doctest::Approx(6.0).epsilon(1e-9));
  }
  SUBCASE("second-order convergence on a smooth scalar function") {
    auto f = [](std::span<const double> w) { return std::sin(w[0]) * std::exp(w[0]); };
    const double w0 = 0.7;
    const double exact = std::exp(w0) * (std::sin(w0) + std::cos(w0));
    const std::vector<double> point = {w0};
    const double e1 = std::abs(central_difference(f, point, 1e-2)[0] - exact);
    const double e2 = std::abs(central_difference(f, point, 5e-3)[0] - exact);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
  }
  SUBCASE("second-order convergence on the network loss") {
    std::mt19937_64 gen(77);
    const NetworkParams p = test_util::random_params(gen, small(2, 2, 2), 0.9);
    const Frames x = test_util::random_frames(gen, 5, 2);
    const Frames t = binary_targets(gen, 5, 2);
    const GradientSet exact = backward(p, forward_sequence(p, x), t);
    const GradientSet coarse = finite_diff_gradient(p, x, t, 4e-2);
    const GradientSet fine = finite_diff_gradient(p, x, t, 2e-2);
    int checked = 0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
      const double e1 = std::abs(coarse[i] - exact[i]);
      const double e2 = std::abs(fine[i] - exact[i]);
      if (e1 < 1e-9) continue;  // third derivative too small to measure
      CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
      ++checked;
    }
    CHECK(checked > int(exact.size()) / 2);
  }
  SUBCASE("invalid step") {
    auto f = [](std::span<const double>) { return 0.0; };
    const std::vector<double> point = {1.0};
    CHECK_THROWS_AS(central_difference(f, point, 0.0), InvalidConfig);
  }
}
