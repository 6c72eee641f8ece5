#pragma once

#include <string>

#include "mf/autograd.hpp"
#include "mf/rng.hpp"

namespace mf {

// GRU convention used everywhere:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   hcand = tanh(Wh x + Uh (r . h) + bh)
//   h' = (1 - z) . h + z . hcand
//
// Cell parameters live in a ParameterSet under "<prefix>.Wz" etc.

// Weight entries ~ normal(0, 0.01 variance); biases zero.
void add_weight(ParameterSet& ps, const std::string& name, std::size_t rows,
                std::size_t cols, Pcg32& rng);
void add_bias(ParameterSet& ps, const std::string& name, std::size_t n);

void add_gru_cell(ParameterSet& ps, const std::string& prefix,
                  std::size_t input_dim, std::size_t hidden_dim, Pcg32& rng);

struct GruCellVars {
  Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};

GruCellVars gru_vars(Tape& tape, ParameterSet& ps, const std::string& prefix);

Var gru_step(Tape& tape, const GruCellVars& cell, Var x, Var h);

}  // namespace mf
