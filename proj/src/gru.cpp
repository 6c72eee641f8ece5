#include "mf/gru.hpp"

namespace mf {

void add_weight(ParameterSet& ps, const std::string& name, std::size_t rows,
                std::size_t cols, Pcg32& rng) {
  Tensor t({rows, cols});
  for (double& v : t.values) v = rng.next_normal(0.0, 0.1);
  ps.add(name, std::move(t));
}

void add_bias(ParameterSet& ps, const std::string& name, std::size_t n) {
  ps.add(name, Tensor({n}));
}

void add_gru_cell(ParameterSet& ps, const std::string& prefix,
                  std::size_t input_dim, std::size_t hidden_dim, Pcg32& rng) {
  for (const char* gate : {"z", "r", "h"}) {
    add_weight(ps, prefix + ".W" + gate, hidden_dim, input_dim, rng);
    add_weight(ps, prefix + ".U" + gate, hidden_dim, hidden_dim, rng);
    add_bias(ps, prefix + ".b" + gate, hidden_dim);
  }
}

GruCellVars gru_vars(Tape& tape, ParameterSet& ps, const std::string& prefix) {
  return GruCellVars{
      tape.param(ps, prefix + ".Wz"), tape.param(ps, prefix + ".Uz"),
      tape.param(ps, prefix + ".bz"), tape.param(ps, prefix + ".Wr"),
      tape.param(ps, prefix + ".Ur"), tape.param(ps, prefix + ".br"),
      tape.param(ps, prefix + ".Wh"), tape.param(ps, prefix + ".Uh"),
      tape.param(ps, prefix + ".bh"),
  };
}

Var gru_step(Tape& t, const GruCellVars& c, Var x, Var h) {
  Var z = t.sigmoid(t.add(t.add(t.matvec(c.wz, x), t.matvec(c.uz, h)), c.bz));
  Var r = t.sigmoid(t.add(t.add(t.matvec(c.wr, x), t.matvec(c.ur, h)), c.br));
  Var hc =
      t.tanh(t.add(t.add(t.matvec(c.wh, x), t.matvec(c.uh, t.mul(r, h))), c.bh));
  return t.add(t.mul(t.affine_const(z, -1.0, 1.0), h), t.mul(z, hc));
}

}  // namespace mf
