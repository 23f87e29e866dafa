#include "dool/tape.hpp"

#include <cmath>
#include <string>

namespace dool {

namespace {

std::string shape_of(const Mat& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace

const Tape::Node& Tape::node(int id) const {
    if (id < 0 || id >= size()) {
        throw UnsupportedGraphError("tape: node id " + std::to_string(id) + " out of range");
    }
    return nodes_[static_cast<std::size_t>(id)];
}

Tape::Node& Tape::node(int id) {
    return const_cast<Node&>(static_cast<const Tape*>(this)->node(id));
}

int Tape::check(int id) const {
    node(id);
    return id;
}

int Tape::push(Node n) {
    eval(n);
    nodes_.push_back(std::move(n));
    return size() - 1;
}

int Tape::constant(Mat m) {
    Node n;
    n.op = Op::constant;
    n.aux = std::move(m);
    return push(std::move(n));
}

int Tape::param(const Mat* storage) {
    if (storage == nullptr) {
        throw UnsupportedGraphError("tape: param storage must not be null");
    }
    Node n;
    n.op = Op::param;
    n.pval = storage;
    n.needs = true;
    return push(std::move(n));
}

int Tape::affine(int x, int w, int b) {
    Node n;
    n.op = Op::affine;
    n.a = check(x);
    n.b = check(w);
    n.r0 = check(b);
    const Mat& X = value(x);
    const Mat& W = value(w);
    const Mat& B = value(b);
    if (X.cols() != W.cols() || B.rows() != W.rows() || B.cols() != 1) {
        throw UnsupportedGraphError("tape: affine shape mismatch X=" + shape_of(X) +
                                    " W=" + shape_of(W) + " b=" + shape_of(B));
    }
    n.needs = node(x).needs || node(w).needs || node(b).needs;
    return push(std::move(n));
}

int Tape::linear(int x, int w) {
    Node n;
    n.op = Op::linear;
    n.a = check(x);
    n.b = check(w);
    if (value(x).cols() != value(w).cols()) {
        throw UnsupportedGraphError("tape: linear shape mismatch X=" + shape_of(value(x)) +
                                    " W=" + shape_of(value(w)));
    }
    n.needs = node(x).needs || node(w).needs;
    return push(std::move(n));
}

int Tape::matmul_nt(int a, int b) {
    Node n;
    n.op = Op::matmul_nt;
    n.a = check(a);
    n.b = check(b);
    if (value(a).cols() != value(b).cols()) {
        throw UnsupportedGraphError("tape: matmul_nt shape mismatch A=" + shape_of(value(a)) +
                                    " B=" + shape_of(value(b)));
    }
    n.needs = node(a).needs || node(b).needs;
    return push(std::move(n));
}

namespace {
void require_same_shape(const Mat& a, const Mat& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw UnsupportedGraphError(std::string("tape: ") + what + " shape mismatch " +
                                    shape_of(a) + " vs " + shape_of(b));
    }
}
} // namespace

int Tape::add(int a, int b) {
    Node n;
    n.op = Op::add;
    n.a = check(a);
    n.b = check(b);
    require_same_shape(value(a), value(b), "add");
    n.needs = node(a).needs || node(b).needs;
    return push(std::move(n));
}

int Tape::sub(int a, int b) {
    Node n;
    n.op = Op::sub;
    n.a = check(a);
    n.b = check(b);
    require_same_shape(value(a), value(b), "sub");
    n.needs = node(a).needs || node(b).needs;
    return push(std::move(n));
}

int Tape::mul(int a, int b) {
    Node n;
    n.op = Op::mul;
    n.a = check(a);
    n.b = check(b);
    require_same_shape(value(a), value(b), "mul");
    n.needs = node(a).needs || node(b).needs;
    return push(std::move(n));
}

int Tape::add_const(int a, Mat c) {
    Node n;
    n.op = Op::add_const;
    n.a = check(a);
    require_same_shape(value(a), c, "add_const");
    n.aux = std::move(c);
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::mul_const(int a, Mat c) {
    Node n;
    n.op = Op::mul_const;
    n.a = check(a);
    require_same_shape(value(a), c, "mul_const");
    n.aux = std::move(c);
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::scale(int a, double alpha) {
    Node n;
    n.op = Op::scale;
    n.a = check(a);
    n.alpha = alpha;
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::row_bcast_mul(int a, int v) {
    Node n;
    n.op = Op::row_bcast_mul;
    n.a = check(a);
    n.b = check(v);
    if (value(v).rows() != 1 || value(v).cols() != value(a).cols()) {
        throw UnsupportedGraphError("tape: row_bcast_mul expects 1x" +
                                    std::to_string(value(a).cols()) + " row, got " +
                                    shape_of(value(v)));
    }
    n.needs = node(a).needs || node(v).needs;
    return push(std::move(n));
}

int Tape::row(int a, int r) {
    Node n;
    n.op = Op::row;
    n.a = check(a);
    if (r < 0 || r >= value(a).rows()) {
        throw UnsupportedGraphError("tape: row index out of range");
    }
    n.r0 = r;
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::cols(int a, int c0, int count) {
    Node n;
    n.op = Op::cols;
    n.a = check(a);
    if (c0 < 0 || count <= 0 || c0 + count > value(a).cols()) {
        throw UnsupportedGraphError("tape: cols slice out of range");
    }
    n.r0 = c0;
    n.count = count;
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::unary(Op op, int a) {
    Node n;
    n.op = op;
    n.a = check(a);
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::tanh_(int a) { return unary(Op::tanh_u, a); }
int Tape::sin_(int a) { return unary(Op::sin_u, a); }
int Tape::cos_(int a) { return unary(Op::cos_u, a); }
int Tape::sech2(int a) { return unary(Op::sech2_u, a); }
int Tape::square(int a) { return unary(Op::square_u, a); }
int Tape::log_(int a) {
    if (value(check(a)).minCoeff() <= 0.0) {
        throw UnsupportedGraphError("log of a non-positive node is outside the smooth domain");
    }
    return unary(Op::log_u, a);
}

int Tape::dot_const(int a, Mat c) {
    Node n;
    n.op = Op::dot_const;
    n.a = check(a);
    require_same_shape(value(a), c, "dot_const");
    n.aux = std::move(c);
    n.needs = node(a).needs;
    return push(std::move(n));
}

int Tape::sum_all(int a) {
    Node n;
    n.op = Op::sum_all;
    n.a = check(a);
    n.needs = node(a).needs;
    return push(std::move(n));
}

void Tape::eval(Node& n) {
    switch (n.op) {
    case Op::constant:
        n.val = n.aux;
        break;
    case Op::param:
        n.val = *n.pval;
        break;
    case Op::affine:
        n.val.noalias() = value(n.a) * value(n.b).transpose();
        n.val.rowwise() += value(n.r0).col(0).transpose();
        break;
    case Op::linear:
        n.val.noalias() = value(n.a) * value(n.b).transpose();
        break;
    case Op::matmul_nt:
        n.val.noalias() = value(n.a) * value(n.b).transpose();
        break;
    case Op::add:
        n.val = value(n.a) + value(n.b);
        break;
    case Op::sub:
        n.val = value(n.a) - value(n.b);
        break;
    case Op::mul:
        n.val = value(n.a).cwiseProduct(value(n.b));
        break;
    case Op::add_const:
        n.val = value(n.a) + n.aux;
        break;
    case Op::mul_const:
        n.val = value(n.a).cwiseProduct(n.aux);
        break;
    case Op::scale:
        n.val = n.alpha * value(n.a);
        break;
    case Op::row_bcast_mul:
        n.val = value(n.a).array().rowwise() * value(n.b).row(0).array();
        break;
    case Op::row:
        n.val = value(n.a).row(n.r0);
        break;
    case Op::cols:
        n.val = value(n.a).middleCols(n.r0, n.count);
        break;
    case Op::tanh_u:
        n.val = value(n.a).array().tanh();
        break;
    case Op::sin_u:
        n.val = value(n.a).array().sin();
        break;
    case Op::cos_u:
        n.val = value(n.a).array().cos();
        break;
    case Op::sech2_u:
        n.val = 1.0 - value(n.a).array().tanh().square();
        break;
    case Op::square_u:
        n.val = value(n.a).array().square();
        break;
    case Op::log_u:
        n.val = value(n.a).array().log();
        break;
    case Op::dot_const:
        n.val.resize(1, 1);
        n.val(0, 0) = value(n.a).cwiseProduct(n.aux).sum();
        break;
    case Op::sum_all:
        n.val.resize(1, 1);
        n.val(0, 0) = value(n.a).sum();
        break;
    }
}

void Tape::forward() {
    for (Node& n : nodes_) {
        eval(n);
    }
}

double Tape::value_scalar(int id) const {
    const Mat& v = value(id);
    if (v.rows() != 1 || v.cols() != 1) {
        throw UnsupportedGraphError("tape: node " + std::to_string(id) + " is not scalar (" +
                                    shape_of(v) + ")");
    }
    return v(0, 0);
}

const Mat& Tape::grad(int id) const {
    const Node& n = node(id);
    return n.grad.size() > 0 ? n.grad : zero_;
}

void Tape::backward(int root) {
    const Node& r = node(root);
    if (r.val.rows() != 1 || r.val.cols() != 1) {
        throw UnsupportedGraphError("tape: backward root must be scalar, got " + shape_of(r.val));
    }
    for (Node& n : nodes_) {
        if (n.needs) {
            n.grad.resize(n.val.rows(), n.val.cols());
            n.grad.setZero();
        } else {
            n.grad.resize(0, 0);
        }
    }
    Node& rn = node(root);
    if (!rn.needs) {
        return; // root does not depend on any parameter: all gradients are zero
    }
    rn.grad(0, 0) = 1.0;

    auto needs = [this](int id) { return id >= 0 && nodes_[static_cast<std::size_t>(id)].needs; };
    auto g = [this](int id) -> Mat& { return nodes_[static_cast<std::size_t>(id)].grad; };

    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.needs || n.grad.size() == 0) continue;
        const Mat& gy = n.grad;
        switch (n.op) {
        case Op::constant:
        case Op::param:
            break;
        case Op::affine:
            if (needs(n.a)) g(n.a).noalias() += gy * value(n.b);
            if (needs(n.b)) g(n.b).noalias() += gy.transpose() * value(n.a);
            if (needs(n.r0)) g(n.r0).col(0) += gy.colwise().sum().transpose();
            break;
        case Op::linear:
        case Op::matmul_nt:
            if (needs(n.a)) g(n.a).noalias() += gy * value(n.b);
            if (needs(n.b)) g(n.b).noalias() += gy.transpose() * value(n.a);
            break;
        case Op::add:
            if (needs(n.a)) g(n.a) += gy;
            if (needs(n.b)) g(n.b) += gy;
            break;
        case Op::sub:
            if (needs(n.a)) g(n.a) += gy;
            if (needs(n.b)) g(n.b) -= gy;
            break;
        case Op::mul:
            if (needs(n.a)) g(n.a) += gy.cwiseProduct(value(n.b));
            if (needs(n.b)) g(n.b) += gy.cwiseProduct(value(n.a));
            break;
        case Op::add_const:
            if (needs(n.a)) g(n.a) += gy;
            break;
        case Op::mul_const:
            if (needs(n.a)) g(n.a) += gy.cwiseProduct(n.aux);
            break;
        case Op::scale:
            if (needs(n.a)) g(n.a) += n.alpha * gy;
            break;
        case Op::row_bcast_mul:
            if (needs(n.a)) g(n.a).array() += gy.array().rowwise() * value(n.b).row(0).array();
            if (needs(n.b)) g(n.b).row(0) += gy.cwiseProduct(value(n.a)).colwise().sum();
            break;
        case Op::row:
            if (needs(n.a)) g(n.a).row(n.r0) += gy.row(0);
            break;
        case Op::cols:
            if (needs(n.a)) g(n.a).middleCols(n.r0, n.count) += gy;
            break;
        case Op::tanh_u:
            if (needs(n.a)) g(n.a).array() += gy.array() * (1.0 - n.val.array().square());
            break;
        case Op::sin_u:
            if (needs(n.a)) g(n.a).array() += gy.array() * value(n.a).array().cos();
            break;
        case Op::cos_u:
            if (needs(n.a)) g(n.a).array() -= gy.array() * value(n.a).array().sin();
            break;
        case Op::sech2_u:
            // d/dx sech^2(x) = -2 tanh(x) sech^2(x)
            if (needs(n.a)) {
                g(n.a).array() += gy.array() * (-2.0 * value(n.a).array().tanh() * n.val.array());
            }
            break;
        case Op::square_u:
            if (needs(n.a)) g(n.a).array() += gy.array() * 2.0 * value(n.a).array();
            break;
        case Op::log_u:
            if (needs(n.a)) g(n.a).array() += gy.array() / value(n.a).array();
            break;
        case Op::dot_const:
            if (needs(n.a)) g(n.a) += gy(0, 0) * n.aux;
            break;
        case Op::sum_all:
            if (needs(n.a)) g(n.a).array() += gy(0, 0);
            break;
        }
    }
}

} // namespace dool
