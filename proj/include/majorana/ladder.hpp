#pragma once

#include "core.hpp"

namespace majorana {

// sum_i alpha_i c_i + beta_i c_i^dag
struct LadderOp {
    VectorC alpha, beta;

    LadderOp adjoint() const { return {beta.conjugate(), alpha.conjugate()}; }
    LadderOp scaled(cplx s) const { return {s * alpha, s * beta}; }
};

inline LadderOp c_op(int sites, int i) {
    return {VectorC::Unit(sites, i), VectorC::Zero(sites)};
}

inline LadderOp cdag_op(int sites, int i) {
    return {VectorC::Zero(sites), VectorC::Unit(sites, i)};
}

// Quasiparticle n of a frame: d_n^dag = sum_i U_in c_i^dag + V_in c_i.
inline LadderOp ddag_op(const MatrixC& u, const MatrixC& v, int n) {
    return {v.col(n), u.col(n)};
}

inline LadderOp d_op(const MatrixC& u, const MatrixC& v, int n) {
    return ddag_op(u, v, n).adjoint();
}

} // namespace majorana
