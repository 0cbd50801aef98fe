#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "pslab/array.hpp"

namespace pslab::diff {

// One node of the reverse-mode tape. `backward_fn` reads this node's
// accumulated gradient and adds each parent's share into parent->grad.
struct Node {
    Array value;
    Array grad;
    bool grad_allocated = false;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Array& ensure_grad();
};

// Handle to a node. Building ops on Values records the graph; backward()
// on a scalar Value runs one reverse topological sweep.
class Value {
public:
    Value() = default;

    static Value constant(Array v);
    static Value param(Array v);
    static Value scalar(double v, bool requires_grad = false);
    static Value wrap(std::shared_ptr<Node> n) {
        Value out;
        out.node_ = std::move(n);
        return out;
    }

    bool defined() const { return node_ != nullptr; }
    const Array& value() const { return node_->value; }
    Array grad() const;
    bool requires_grad() const { return node_->requires_grad; }
    int height() const { return node_->value.height(); }
    int width() const { return node_->value.width(); }
    int channels() const { return node_->value.channels(); }
    double item() const;

    // Reverse sweep from this node, which must hold a single element.
    // Each reachable node is visited exactly once, in reverse topological
    // order; gradients of shared subexpressions accumulate by summation.
    void backward() const;

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

// Elementwise ops. Binary ops take same-shape operands or broadcast a
// single-element operand; no other broadcasting exists.
Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);  // rejects |b| < 1e-12 anywhere
Value neg(const Value& a);
Value vabs(const Value& a);  // subgradient 0 at 0
Value vexp(const Value& a);
Value clamp(const Value& a, double lo, double hi);  // zero gradient outside (lo, hi)
Value scale(const Value& a, double k);
Value offset(const Value& a, double k);

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator/(const Value& a, const Value& b) { return div(a, b); }
inline Value operator+(const Value& a, double k) { return offset(a, k); }
inline Value operator-(const Value& a, double k) { return offset(a, -k); }
inline Value operator*(const Value& a, double k) { return scale(a, k); }
inline Value operator-(const Value& a) { return neg(a); }

// Mean over all elements, or over elements where mask (H x W, values 0/1)
// is 1 across every channel. Divides by max(count, 1). Returns a scalar.
Value reduce_mean(const Value& a, const Array* mask = nullptr);

// 3x3 box filter, stride 1, same size, edge-replicating pad, per channel.
Value avg_pool3(const Value& a);

// Horizontal bilinear sampling: out(y,x,c) interpolates source(y, coords(y,x), c).
// Coordinates outside [0, W-1] yield validity 0 and output 0 with no gradient.
struct Sampled {
    Value out;
    Array validity;  // H x W, 1 where the sample was in range
};
Sampled hsample(const Value& source, const Value& x_coords);

// Copy of the value with gradient flow cut.
Value detach(const Value& a);

// Cross-correlation of input (H x W x C) with one odd-sized kernel
// (kh x kw x C), zero padding, single-channel output.
Value conv2d(const Value& input, const Value& kernel, int stride, int padding);

// Channel plumbing.
Value channel_mean(const Value& a);                     // (H,W,C) -> (H,W,1)
Value channel_broadcast(const Value& a, int channels);  // (H,W,1) -> (H,W,C)
Value stack_channels(const std::vector<Value>& parts);  // n x (H,W,1) -> (H,W,n)

// Forward differences along x / y; the last column / row is zero.
Value diff_x(const Value& a);
Value diff_y(const Value& a);

// Horizontal mirror of the node (differentiable permutation).
Value hflip(const Value& a);

}  // namespace pslab::diff
