#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace graphhist {

/// One recorded operation: an identifier plus a closure holding whatever
/// saved activations its backward pass needs.
struct TapeNode {
  std::string op;
  std::function<void()> backward;
};

/// Records operations in forward order and replays their backward closures
/// in exact reverse order. A tape belongs to one training thread.
class Tape {
 public:
  void record(std::string op, std::function<void()> backward) {
    nodes_.push_back({std::move(op), std::move(backward)});
  }

  /// Runs every recorded backward closure, last recorded first.
  void backward() {
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }
  const std::vector<TapeNode>& nodes() const { return nodes_; }

 private:
  std::vector<TapeNode> nodes_;
};

}  // namespace graphhist
