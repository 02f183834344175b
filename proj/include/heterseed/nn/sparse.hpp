#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace heterseed::nn {

/// Constant CSR matrix used to bridge graph sparsity into dense autodiff ops.
template <class T>
struct SparseRows {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;
  std::vector<T> weights;

  std::size_t nnz() const { return indices.size(); }

  void push(std::size_t col, T w) {
    indices.push_back(col);
    weights.push_back(w);
  }
  void end_row() {
    offsets.push_back(indices.size());
    ++rows;
  }
};

template <class T>
using SparsePtr = std::shared_ptr<const SparseRows<T>>;

}  // namespace heterseed::nn
