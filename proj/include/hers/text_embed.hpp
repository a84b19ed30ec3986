// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_TEXT_EMBED_HPP
#define HERS_TEXT_EMBED_HPP

#include <cstdint>
#include <string_view>
#include <vector>

namespace hers::fusion {

// Deterministic stand-in for a learned text encoder: signed hashed character
// n-grams (n = 2, 3) of the tokenized record, folded into `dim` buckets and
// L2-normalized. Near-identical strings ("Ann" vs "Anne") share most n-grams
// and land on nearby but distinct vectors, so the tokenizer's format
// sensitivity is exercisable end to end without a neural model.
std::vector<double> hashed_ngram_embedding(std::string_view text, std::size_t dim = 128);

}  // namespace hers::fusion

#endif  // HERS_TEXT_EMBED_HPP
