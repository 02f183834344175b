#pragma once

#include <functional>
#include <vector>

#include "heterseed/error.hpp"
#include "heterseed/nn/tensor.hpp"

namespace heterseed::nn {

/// Records executed operations so that adjoints can be replayed in reverse.
///
/// backward() zeroes the gradients of every recorded intermediate, seeds the
/// loss with 1 and runs each recorded adjoint exactly once, newest first.
/// Leaf tensors (parameters) are never zeroed here: calling backward twice
/// without clearing them accumulates, as with most frameworks.
template <class T>
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  void record(Var<T> output, std::function<void()> adjoint) {
    entries_.push_back({std::move(output), std::move(adjoint)});
  }

  /// Returns the number of adjoints executed.
  std::size_t backward(const Var<T>& loss) {
    if (!loss || loss->size() != 1) fail(ErrorCode::ShapeMismatch, "backward needs a scalar loss");
    std::size_t end = entries_.size();
    while (end > 0 && entries_[end - 1].output != loss) --end;
    if (end == 0 || !loss->requires_grad) fail(ErrorCode::DisconnectedLoss, "loss was not produced on this tape");
    for (std::size_t i = 0; i < end; ++i) entries_[i].output->zero_grad();
    loss->grad.assign(1, T(1));
    for (std::size_t i = end; i-- > 0;) entries_[i].adjoint();
    return end;
  }

 private:
  struct Entry {
    Var<T> output;
    std::function<void()> adjoint;
  };
  bool recording_;
  std::vector<Entry> entries_;
};

}  // namespace heterseed::nn
