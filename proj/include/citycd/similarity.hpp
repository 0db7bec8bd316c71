// Copyright 2026 The citycd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CITYCD_SIMILARITY_HPP_
#define CITYCD_SIMILARITY_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "citycd/error.hpp"

namespace citycd {

/// Size of the intersection of two ascending ranges.
template <class T>
std::size_t intersection_size(std::span<const T> a, std::span<const T> b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

/// |A n B| / |A u B|, 0 when both are empty.
inline double jaccard_from_counts(std::size_t inter, std::size_t na,
                                  std::size_t nb) {
  const std::size_t uni = na + nb - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// |A n B| / (|A|^alpha |B|^(1-alpha)), 0 when either is empty.
inline double cosine_from_counts(std::size_t inter, std::size_t na,
                                 std::size_t nb, double alpha) {
  if (na == 0 || nb == 0) return 0.0;
  return static_cast<double>(inter) /
         (std::pow(static_cast<double>(na), alpha) *
          std::pow(static_cast<double>(nb), 1.0 - alpha));
}

template <class T>
double set_jaccard(std::span<const T> a, std::span<const T> b) {
  return jaccard_from_counts(intersection_size(a, b), a.size(), b.size());
}

template <class T>
double set_cosine(std::span<const T> a, std::span<const T> b,
                  double alpha = 0.5) {
  return cosine_from_counts(intersection_size(a, b), a.size(), b.size(), alpha);
}

enum class SimilarityKind { SetJaccard, SetCosine };

struct Similarity {
  SimilarityKind kind = SimilarityKind::SetJaccard;
  double alpha = 0.5;  // SetCosine only

  double operator()(std::size_t inter, std::size_t na, std::size_t nb) const {
    return kind == SimilarityKind::SetJaccard
               ? jaccard_from_counts(inter, na, nb)
               : cosine_from_counts(inter, na, nb, alpha);
  }

  std::string str() const {
    return kind == SimilarityKind::SetJaccard ? "sj" : "sc";
  }

  static Similarity parse(std::string_view s) {
    if (s == "sj" || s == "SJ" || s == "jaccard") return {SimilarityKind::SetJaccard};
    if (s == "sc" || s == "SC" || s == "cosine") return {SimilarityKind::SetCosine};
    throw ConfigError("unknown similarity '" + std::string(s) + "'");
  }

  friend bool operator==(const Similarity&, const Similarity&) = default;
};

struct KnnParams {
  Similarity similarity;
  std::size_t k = 100;

  void validate() const {
    if (k < 1) throw ConfigError("k-NN neighbourhood size must be >= 1");
    if (similarity.alpha < 0.0 || similarity.alpha > 1.0) {
      throw ConfigError("SetCosine alpha must lie in [0, 1]");
    }
  }
};

}  // namespace citycd

#endif  // CITYCD_SIMILARITY_HPP_
