#pragma once

// Minimal tape-based reverse-mode automatic differentiation.
//
// A Var is a value plus an index into the thread's active Tape. Every
// arithmetic operation appends one node holding up to two parent indices and
// the local partial derivatives. Tape::adjoints() sweeps the nodes backwards.
// Constants (plain doubles) never touch the tape.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gate::ad {

class Tape {
public:
    struct Node {
        std::int32_t a;
        std::int32_t b;
        double da;
        double db;
    };

    Tape() { nodes_.reserve(1 << 16); }

    std::int32_t push(std::int32_t a, double da, std::int32_t b = -1, double db = 0.0) {
        nodes_.push_back({a, b, da, db});
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::int32_t new_input() { return push(-1, 0.0); }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

    /// Adjoints of every node with respect to `output`.
    std::vector<double> adjoints(std::int32_t output) const {
        std::vector<double> adj(nodes_.size(), 0.0);
        if (output < 0) return adj;
        adj[static_cast<std::size_t>(output)] = 1.0;
        for (std::int32_t i = output; i >= 0; --i) {
            const double g = adj[static_cast<std::size_t>(i)];
            if (g == 0.0) continue;
            const Node& n = nodes_[static_cast<std::size_t>(i)];
            if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += g * n.da;
            if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += g * n.db;
        }
        return adj;
    }

    static Tape*& active() {
        thread_local Tape* tape = nullptr;
        return tape;
    }

private:
    std::vector<Node> nodes_;
};

/// Installs a tape as the thread's active tape for the scope's lifetime.
class TapeScope {
public:
    explicit TapeScope(Tape& tape) : previous_(Tape::active()) { Tape::active() = &tape; }
    ~TapeScope() { Tape::active() = previous_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

class Var {
public:
    Var() = default;
    Var(double v) : v_(v) {} // NOLINT: implicit promotion of constants

    static Var input(double v) {
        Var x(v);
        x.idx_ = tape().new_input();
        return x;
    }

    double value() const { return v_; }
    std::int32_t index() const { return idx_; }
    bool is_constant() const { return idx_ < 0; }

    // Node with one parent.
    static Var unary(double v, const Var& a, double da) {
        Var r(v);
        if (!a.is_constant()) r.idx_ = tape().push(a.idx_, da);
        return r;
    }

    static Var binary(double v, const Var& a, double da, const Var& b, double db) {
        if (a.is_constant()) return unary(v, b, db);
        if (b.is_constant()) return unary(v, a, da);
        Var r(v);
        r.idx_ = tape().push(a.idx_, da, b.idx_, db);
        return r;
    }

    Var& operator+=(const Var& o) { return *this = *this + o; }
    Var& operator-=(const Var& o) { return *this = *this - o; }
    Var& operator*=(const Var& o) { return *this = *this * o; }
    Var& operator/=(const Var& o) { return *this = *this / o; }

    friend Var operator+(const Var& a, const Var& b) { return binary(a.v_ + b.v_, a, 1.0, b, 1.0); }
    friend Var operator-(const Var& a, const Var& b) { return binary(a.v_ - b.v_, a, 1.0, b, -1.0); }
    friend Var operator*(const Var& a, const Var& b) { return binary(a.v_ * b.v_, a, b.v_, b, a.v_); }
    friend Var operator/(const Var& a, const Var& b) {
        const double r = a.v_ / b.v_;
        return binary(r, a, 1.0 / b.v_, b, -r / b.v_);
    }
    friend Var operator-(const Var& a) { return unary(-a.v_, a, -1.0); }

    friend bool operator<(const Var& a, const Var& b) { return a.v_ < b.v_; }
    friend bool operator>(const Var& a, const Var& b) { return a.v_ > b.v_; }
    friend bool operator<=(const Var& a, const Var& b) { return a.v_ <= b.v_; }
    friend bool operator>=(const Var& a, const Var& b) { return a.v_ >= b.v_; }

private:
    static Tape& tape() {
        Tape* t = Tape::active();
        if (!t) throw std::logic_error("ad::Var used without an active tape");
        return *t;
    }

    double v_ = 0.0;
    std::int32_t idx_ = -1;
};

inline Var exp(const Var& a) {
    const double e = std::exp(a.value());
    return Var::unary(e, a, e);
}
inline Var log(const Var& a) { return Var::unary(std::log(a.value()), a, 1.0 / a.value()); }
inline Var log10(const Var& a) { return Var::unary(std::log10(a.value()), a, 1.0 / (a.value() * std::log(10.0))); }
inline Var log1p(const Var& a) { return Var::unary(std::log1p(a.value()), a, 1.0 / (1.0 + a.value())); }
inline Var expm1(const Var& a) { return Var::unary(std::expm1(a.value()), a, std::exp(a.value())); }
inline Var sqrt(const Var& a) {
    const double s = std::sqrt(a.value());
    return Var::unary(s, a, 0.5 / s);
}
inline Var pow(const Var& a, double k) {
    const double p = std::pow(a.value(), k);
    // d/da a^k = k a^(k-1); written as k p / a when a != 0
    const double d = a.value() != 0.0 ? k * p / a.value() : (k == 1.0 ? 1.0 : 0.0);
    return Var::unary(p, a, d);
}
inline Var pow(double base, const Var& x) {
    const double p = std::pow(base, x.value());
    return Var::unary(p, x, p * std::log(base));
}
inline Var pow(const Var& a, const Var& k) { return exp(k * log(a)); }

// Branch selection on values; the derivative follows the selected argument.
inline Var max(const Var& a, const Var& b) { return a.value() >= b.value() ? a : b; }
inline Var min(const Var& a, const Var& b) { return a.value() <= b.value() ? a : b; }

} // namespace gate::ad

namespace gate {

/// Uniform value access for model code templated on the scalar type.
inline double value_of(double x) { return x; }
inline double value_of(const ad::Var& x) { return x.value(); }

template <class T>
T smax(const T& a, const T& b) {
    return value_of(a) >= value_of(b) ? a : b;
}
template <class T>
T smin(const T& a, const T& b) {
    return value_of(a) <= value_of(b) ? a : b;
}

} // namespace gate
