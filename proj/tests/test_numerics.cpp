#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mf/autograd.hpp"
#include "mf/gradcheck.hpp"
#include "mf/gru.hpp"
#include "mf/rng.hpp"

using namespace mf;

namespace {

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line scalar evaluation of the documented GRU convention, written
// independently of the tape ops.
std::vector<double> gru_ref(const ParameterSet& ps, const std::string& pfx,
                            const std::vector<double>& x,
                            const std::vector<double>& h) {
  const Tensor& wz = ps.get(pfx + ".Wz");
  const std::size_t H = wz.rows(), I = wz.cols();
  auto mv = [&](const Tensor& w, const std::vector<double>& v, std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += w.at(i, j) * v[j];
    return s;
  };
  std::vector<double> out(H);
  REQUIRE(x.size() == I);
  for (std::size_t i = 0; i < H; ++i) {
    double z = sigmoid_ref(mv(wz, x, i) + mv(ps.get(pfx + ".Uz"), h, i) +
                           ps.get(pfx + ".bz")[i]);
    double r_times_h = 0.0;
    for (std::size_t j = 0; j < H; ++j) {
      double rj = sigmoid_ref(mv(ps.get(pfx + ".Wr"), x, j) +
                              mv(ps.get(pfx + ".Ur"), h, j) +
                              ps.get(pfx + ".br")[j]);
      r_times_h += ps.get(pfx + ".Uh").at(i, j) * (rj * h[j]);
    }
    double hc = std::tanh(mv(ps.get(pfx + ".Wh"), x, i) + r_times_h +
                          ps.get(pfx + ".bh")[i]);
    out[i] = (1.0 - z) * h[i] + z * hc;
  }
  return out;
}

}  // namespace

TEST_CASE("gru step with zero params halves the state") {
  ParameterSet ps;
  Pcg32 rng(0, 0);
  add_gru_cell(ps, "c", 2, 2, rng);
  for (auto& [name, t] : ps.params) t.fill(0.0);
  Tape tape;
  auto cell = gru_vars(tape, ps, "c");
  Var x = tape.leaf(Tensor({2}, {0.7, -0.3}));
  Var h = tape.leaf(Tensor({2}, {0.4, -0.2}));
  Var out = gru_step(tape, cell, x, h);
  CHECK(out->value[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(out->value[1] == doctest::Approx(-0.1).epsilon(1e-12));

  Var h0 = tape.leaf(Tensor({2}));
  Var out0 = gru_step(tape, cell, x, h0);
  CHECK(out0->value[0] == 0.0);
  CHECK(out0->value[1] == 0.0);
}

TEST_CASE("gru step matches straight-line reference on seeded inputs") {
  ParameterSet ps;
  Pcg32 rng(11, 0);
  add_gru_cell(ps, "c", 3, 4, rng);
  std::vector<double> x{0.3, -0.8, 0.15}, h{0.5, -0.25, 0.9, -0.6};
  Tape tape;
  auto cell = gru_vars(tape, ps, "c");
  Var out = gru_step(tape, cell, tape.leaf(Tensor({3}, x)),
                     tape.leaf(Tensor({4}, h)));
  auto ref = gru_ref(ps, "c", x, h);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(out->value[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("softmax_xent examples") {
  Tape tape;
  SUBCASE("uniform logits") {
    Var loss = tape.softmax_xent(tape.leaf(Tensor({4})), 2);
    CHECK(loss->value[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(loss->aux[i] == doctest::Approx(0.25).epsilon(1e-12));
      sum += loss->aux[i];
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
  SUBCASE("closed form two-way") {
    Var loss = tape.softmax_xent(tape.leaf(Tensor({2}, {10.0, 0.0})), 0);
    CHECK(loss->value[0] ==
          doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
  }
  SUBCASE("shift invariance") {
    Tensor logits({3}, {0.2, -1.4, 3.3});
    Var a = tape.softmax(tape.leaf(logits));
    for (double& v : logits.values) v += 123.456;
    Var b = tape.softmax(tape.leaf(logits));
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(a->value[i] == doctest::Approx(b->value[i]).epsilon(1e-12));
  }
  SUBCASE("target out of range") {
    CHECK_THROWS_AS(tape.softmax_xent(tape.leaf(Tensor({3})), 3),
                    ContractViolation);
  }
}

TEST_CASE("softmax sums to 1 for large dims") {
  Tape tape(false);
  Pcg32 rng(3, 9);
  Tensor logits({100000});
  for (double& v : logits.values) v = rng.next_double() * 40.0 - 20.0;
  Var p = tape.softmax(tape.leaf(std::move(logits)));
  double sum = 0.0;
  for (double v : p->value.values) sum += v;
  CHECK(std::fabs(sum - 1.0) <= 1e-12);
}

TEST_CASE("backward of linear map gives outer product") {
  ParameterSet ps;
  ps.add("W", Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  ps.add("unused", Tensor({2}, {1.0, 1.0}));
  Tape tape;
  Var w = tape.param(ps, "W");
  Var x = tape.leaf(Tensor({3}, {0.5, -1.0, 2.0}));
  Var y = tape.matvec(w, x);
  Var loss = tape.affine_const(tape.dot(y, y), 0.5, 0.0);
  GradientMap g = tape.backward(loss, ps);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(g.at("W").at(i, j) ==
            doctest::Approx(y->value[i] * x->value[j]).epsilon(1e-12));
  for (double v : g.at("unused").values) CHECK(v == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  ParameterSet ps;
  ps.add("W", Tensor({2, 2}, {1, 0, 0, 1}));
  Tape tape;
  Var y = tape.matvec(tape.param(ps, "W"), tape.leaf(Tensor({2}, {1, 1})));
  CHECK_THROWS_AS(tape.backward(y, ps), ContractViolation);
}

TEST_CASE("adam first step moves by -lr*sign(g)") {
  ParameterSet ps;
  ps.add("p", Tensor({1}, {0.0}));
  GradientMap g;
  g["p"] = Tensor({1}, {0.37});
  AdamSettings s;
  s.lr = 0.1;
  adam_step(ps, g, s);
  CHECK(ps.get("p")[0] == doctest::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam with zero gradients leaves fresh params fixed") {
  ParameterSet ps;
  ps.add("p", Tensor({3}, {1.0, -2.0, 0.5}));
  GradientMap g;
  g["p"] = Tensor({3});
  AdamSettings s;
  adam_step(ps, g, s);
  adam_step(ps, GradientMap{}, s);  // missing key = zero gradient
  CHECK(ps.get("p")[0] == 1.0);
  CHECK(ps.get("p")[1] == -2.0);
  CHECK(ps.get("p")[2] == 0.5);
}

TEST_CASE("adam two steps match the scalar recursion") {
  ParameterSet ps;
  ps.add("p", Tensor({1}, {0.0}));
  GradientMap g;
  g["p"] = Tensor({1}, {1.0});
  AdamSettings s;
  s.lr = 0.1;
  adam_step(ps, g, s);
  adam_step(ps, g, s);
  // Hand recursion: m_t = 0.9 m + 0.1 g, v_t = 0.999 v + 0.001 g^2.
  double m = 0, v = 0, p = 0;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1;
    v = 0.999 * v + 0.001;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    p -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
  }
  CHECK(ps.get("p")[0] == doctest::Approx(p).epsilon(1e-15));
}

TEST_CASE("grad_check validates a seeded tiny model and catches injected bugs") {
  ParameterSet ps;
  Pcg32 rng(5, 0);
  add_gru_cell(ps, "c", 3, 4, rng);
  add_weight(ps, "out", 1, 4, rng);
  std::vector<double> x{0.2, -0.6, 0.9}, h{0.1, 0.4, -0.3, 0.8};

  bool inject = false;
  GradCheckModel model = [&](ParameterSet& p, GradientMap* grads) {
    Tape tape(grads != nullptr);
    auto cell = gru_vars(tape, p, "c");
    Var hh = gru_step(tape, cell, tape.leaf(Tensor({3}, x)),
                      tape.leaf(Tensor({4}, h)));
    Var y = tape.matvec(tape.param(p, "out"), hh);
    Var loss = tape.affine_const(tape.dot(y, y), 0.5, 0.0);
    if (grads) {
      *grads = tape.backward(loss, p);
      if (inject)
        for (double& v : grads->at("c.Wz").values) v *= 2.0;
    }
    return loss->value[0];
  };

  auto report = grad_check(model, ps, 1e-4);
  CHECK(report.pass);
  CHECK(report.entries.size() == ps.params.size());

  inject = true;
  auto bad = grad_check(model, ps, 1e-4);
  CHECK_FALSE(bad.pass);
  for (const auto& e : bad.entries)
    if (e.name == "c.Wz") CHECK_FALSE(e.pass);

  ParameterSet empty;
  auto er = grad_check([](ParameterSet&, GradientMap*) { return 1.0; }, empty, 1e-4);
  CHECK(er.pass);
  CHECK(er.entries.empty());
}

TEST_CASE("mixture ops gradcheck (softmax/pick/log/mul_scalar/stack)") {
  ParameterSet ps;
  Pcg32 rng(9, 0);
  add_weight(ps, "A", 3, 3, rng);
  add_weight(ps, "b", 1, 3, rng);
  std::vector<double> x{0.4, -0.2, 0.7};

  GradCheckModel model = [&](ParameterSet& p, GradientMap* grads) {
    Tape tape(grads != nullptr);
    Var a = tape.param(ps, "A");
    Var scores = tape.matvec(a, tape.leaf(Tensor({3}, x)));
    Var alpha = tape.softmax(scores);
    Var gate = tape.sigmoid(tape.pick(tape.matvec(tape.param(ps, "b"),
                                                  tape.leaf(Tensor({3}, x))),
                                      0));
    Var mix = tape.add(tape.mul_scalar(alpha, gate),
                       tape.mul_scalar(alpha, tape.affine_const(gate, -1.0, 1.0)));
    Var probs = tape.stack({tape.pick(mix, 0), tape.pick(mix, 1), tape.pick(mix, 2)});
    Var loss = tape.affine_const(tape.pick(tape.log(probs), 1), -1.0, 0.0);
    if (grads) *grads = tape.backward(loss, p);
    return loss->value[0];
  };
  auto report = grad_check(model, ps, 1e-4);
  CHECK(report.pass);
}
