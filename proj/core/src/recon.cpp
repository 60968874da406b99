#include "dywave/recon.hpp"

#include <stdexcept>

#include "dywave/ops.hpp"

namespace dywave {

Var decode_tokens(const Var& tokens, const ParamLeaves& pl, const std::string& prefix,
                  std::size_t planes, std::size_t L) {
    const Var& Wp = pl.at(prefix + ".proj.W");
    if (Wp.value().dim(0) != planes)
        throw std::invalid_argument("decode_tokens: decoder emits " +
                                    std::to_string(Wp.value().dim(0)) + " planes, need " +
                                    std::to_string(planes));
    Var proj = nn::linear_tokens(tokens, Wp, pl.at(prefix + ".proj.b"));
    Var grid = ops::transpose(proj); // [planes x n]
    Var up = ops::conv1d_transpose(grid, pl.at(prefix + ".convT.W"), 4);
    return ops::resample(up, L);
}

Tensor stack_planes(const WaveletStack& stack) {
    std::size_t C = stack.channels(), L = stack.length(), J = stack.levels;
    Tensor out({(J + 1) * C, L});
    for (std::size_t j = 0; j < J; ++j)
        std::copy(stack.details[j].data(), stack.details[j].data() + C * L,
                  out.data() + j * C * L);
    std::copy(stack.approx.data(), stack.approx.data() + C * L, out.data() + J * C * L);
    return out;
}

Var recon_loss(const Var& W_hat, const WaveletStack& stack) {
    Tensor target = stack_planes(stack);
    if (!W_hat.value().same_shape(target))
        throw std::invalid_argument("recon_loss: prediction " + W_hat.value().shape_str() +
                                    " vs coefficient stack " + target.shape_str());
    return ops::mse(W_hat, Var::constant(std::move(target)));
}

Var total_loss(const Var& task, const Var& rec, double lambda_rec) {
    if (lambda_rec < 0.0) throw std::invalid_argument("total_loss: negative weight");
    if (lambda_rec == 0.0) return task;
    return ops::add(task, ops::scale(rec, lambda_rec));
}

} // namespace dywave
