#pragma once

#include <vector>

#include "mf/corpus.hpp"
#include "mf/gru.hpp"

namespace mf {

// Bi-GRU over a token sequence using rows of the embedding matrix. PAD tokens
// are dropped before encoding. Returns concat(final forward, final backward),
// dim 2*hidden; the zero vector when nothing remains.
Var bigru_final(Tape& tape, const GruCellVars& fwd, const GruCellVars& bwd,
                Var emb, const Ids& tokens, std::size_t hidden);

// Per-position states concat(fwd_i, bwd_i), PAD dropped. Empty input -> empty.
std::vector<Var> bigru_states(Tape& tape, const GruCellVars& fwd,
                              const GruCellVars& bwd, Var emb,
                              const Ids& tokens, std::size_t hidden);

}  // namespace mf
