#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "dywave/tensor.hpp"

namespace dywave {

// Reverse-mode tape. A Node owns its forward value; the gradient buffer is
// allocated lazily the first time backward touches it. Backward rules are
// closures that read node->grad and accumulate into the parents' grads with
// plain kernel calls — no second-order support, none is needed.
struct Node {
    Tensor value;
    Tensor grad;                 // empty until needed
    bool requires_grad = false;
    bool grad_alloc = false;
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Tensor& ensure_grad() {
        if (!grad_alloc) {
            grad = Tensor::zeros(value.shape());
            grad_alloc = true;
        }
        return grad;
    }
};

using NodePtr = std::shared_ptr<Node>;

// Lightweight handle; ops are free functions over Vars (see ops.hpp).
class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    static Var leaf(Tensor value, bool requires_grad) {
        auto n = std::make_shared<Node>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        return Var(std::move(n));
    }

    static Var constant(Tensor value) { return leaf(std::move(value), false); }
    static Var param(Tensor value) { return leaf(std::move(value), true); }

    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    bool has_grad() const { return node_->grad_alloc; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const NodePtr& node() const { return node_; }
    bool defined() const { return static_cast<bool>(node_); }

private:
    NodePtr node_;
};

inline Var make_op(const char* name, Tensor value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->op = name;
    bool need = false;
    for (const auto& p : parents) need = need || (p && p->requires_grad);
    n->requires_grad = need;
    if (need) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Var(n);
}

// Accumulates gradients of everything `loss` depends on, in reverse
// topological order. Iterative DFS; a node found on the active stack twice
// means the graph is cyclic, which is a construction bug worth failing loudly.
inline void backward(const Var& loss) {
    if (!loss.defined()) throw std::invalid_argument("backward: undefined loss");
    if (loss.value().numel() != 1)
        throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                    loss.value().shape_str());
    Node* root = loss.node().get();
    if (!root->requires_grad) return; // constant loss: nothing reachable

    // topological sort (children before parents in `order`)
    std::vector<Node*> order;
    std::unordered_map<Node*, int> state; // 0 unseen / 1 on stack / 2 done
    struct Frame { Node* n; std::size_t next; };
    std::vector<Frame> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            Node* p = f.n->parents[f.next++].get();
            if (!p || !p->requires_grad) continue;
            int& st = state[p];
            if (st == 1) throw std::runtime_error("backward: cycle detected in graph");
            if (st == 0) {
                st = 1;
                stack.push_back({p, 0});
            }
        } else {
            state[f.n] = 2;
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_alloc) n->backward_fn(*n);
    }
}

} // namespace dywave
