#pragma once

#include <Eigen/Dense>

#include <vector>

#include "dool/common.hpp"

namespace dool {

using Mat = Eigen::MatrixXd;

/// Reverse-mode automatic differentiation over dense matrix nodes.
///
/// A Tape is an append-only list of nodes; every builder method evaluates its
/// result eagerly, so values can be inspected as the graph is constructed.
/// Graphs are built once and re-run cheaply: forward() refreshes all values
/// in place (parameter leaves re-read their bound storage, so an optimizer
/// update is picked up automatically), backward() accumulates gradients of a
/// scalar root into every node that depends on a parameter.
///
/// The op set is intentionally closed: everything expressible here is smooth
/// in the parameters, so reverse mode is exact.  Shape mismatches and
/// non-scalar backward roots throw UnsupportedGraphError at build time.
class Tape {
public:
    enum class Op {
        constant,   // fixed payload
        param,      // leaf bound to external storage (re-read on forward)
        affine,     // X * W^T + 1 b^T          (X: n x in, W: out x in, b: out x 1)
        linear,     // X * W^T
        matmul_nt,  // A * B^T                  (A: n x k, B: m x k)
        add,        // A + B
        sub,        // A - B
        mul,        // A .* B
        add_const,  // A + C
        mul_const,  // A .* C
        scale,      // alpha * A
        row_bcast_mul, // A .* (1 x p row, broadcast over rows of A)
        row,        // single-row slice
        cols,       // column-block slice
        tanh_u,     // tanh(A)
        sin_u,
        cos_u,
        sech2_u,    // 1 - tanh(A)^2
        square_u,   // A .* A
        log_u,      // log(A)
        dot_const,  // sum(A .* C) -> 1 x 1
        sum_all,    // sum(A)      -> 1 x 1
    };

    // ---- leaves ----------------------------------------------------------
    int constant(Mat m);
    /// Bind a leaf to caller-owned storage; *storage must stay alive and keep
    /// its shape for the lifetime of the tape.
    int param(const Mat* storage);

    // ---- ops --------------------------------------------------------------
    int affine(int x, int w, int b);
    int linear(int x, int w);
    int matmul_nt(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int add_const(int a, Mat c);
    int mul_const(int a, Mat c);
    int scale(int a, double alpha);
    int row_bcast_mul(int a, int v);
    int row(int a, int r);
    int cols(int a, int c0, int count);
    int tanh_(int a);
    int sin_(int a);
    int cos_(int a);
    int sech2(int a);
    int square(int a);
    int log_(int a);
    int dot_const(int a, Mat c);
    int sum_all(int a);

    // ---- execution ---------------------------------------------------------
    /// Recompute every node value in topological (construction) order.
    void forward();
    /// Gradient of scalar node `root` w.r.t. every parameter-dependent node.
    void backward(int root);

    const Mat& value(int id) const { return node(id).val; }
    double value_scalar(int id) const;
    /// Valid after backward(); zero matrix for nodes outside the root's cone.
    const Mat& grad(int id) const;
    bool needs_grad(int id) const { return node(id).needs; }
    int size() const { return static_cast<int>(nodes_.size()); }

private:
    struct Node {
        Op op;
        int a = -1, b = -1;
        double alpha = 0.0;
        int r0 = 0, count = 0;
        Mat aux;                       // constant payload
        const Mat* pval = nullptr;     // param binding
        Mat val;
        Mat grad;
        bool needs = false;
    };

    const Node& node(int id) const;
    Node& node(int id);
    int check(int id) const;
    int push(Node n);
    int unary(Op op, int a);
    void eval(Node& n);

    std::vector<Node> nodes_;
    Mat zero_;                         // returned for grads never touched
};

} // namespace dool
