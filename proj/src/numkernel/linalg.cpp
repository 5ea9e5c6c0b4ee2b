#include "clgen/numkernel/linalg.hpp"

namespace clgen::nk {

SvdResult<double> svd(const Tensor& z) { return svd(z.matrix()); }

double nuclear_norm(const Tensor& z) { return nuclear_norm(z.matrix()); }

Tensor nuclear_norm_grad(const Tensor& z) {
    Tensor out(z.shape());
    out.matrix() = nuclear_norm_grad(z.matrix());
    return out;
}

int numerical_rank(const Tensor& z, double rel_tol) { return numerical_rank(z.matrix(), rel_tol); }

Tensor row_l2_normalize(const Tensor& z, NormalizeStats* stats) {
    Tensor out(z.shape());
    out.matrix() = row_l2_normalize(z.matrix(), stats);
    return out;
}

} // namespace clgen::nk
