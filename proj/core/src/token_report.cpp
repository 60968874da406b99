#include "dywave/token_report.hpp"

#include <stdexcept>

#include "json.hpp"

namespace dywave {

using nlohmann::json;

std::string token_report_json(const TokenizeResult& tok, std::size_t L, std::size_t C,
                              double tau, bool emit_tokens) {
    if (tok.anchors.empty())
        throw std::invalid_argument("token report: no anchors (not a dynamic tokenization?)");
    if (tok.anchors.size() != tok.n_tokens)
        throw std::logic_error("token report: token count diverged from anchor count");
    if (tok.cluster_of.size() != L || tok.saliency.numel() != L)
        throw std::logic_error("token report: per-timestep arrays do not span the signal");

    json anchors = json::array();
    for (std::size_t i = 0; i < tok.anchors.size(); ++i) {
        if (i && tok.anchors[i] <= tok.anchors[i - 1])
            throw std::logic_error("token report: anchors not strictly increasing");
        anchors.push_back(tok.anchors[i] + 1); // report as 1-based timesteps
    }

    json clusters = json::array();
    std::size_t run_start = 0;
    for (std::size_t t = 1; t <= L; ++t) {
        if (t == L || tok.cluster_of[t] != tok.cluster_of[run_start]) {
            if (tok.cluster_of[run_start] != clusters.size())
                throw std::logic_error("token report: cluster ids out of order");
            clusters.push_back({run_start + 1, t});
            run_start = t;
        }
    }
    if (clusters.size() != tok.anchors.size())
        throw std::logic_error("token report: cluster spans do not match anchors");

    json saliency = json::array();
    for (std::size_t t = 0; t < L; ++t) saliency.push_back(tok.saliency[t]);

    json j;
    j["L"] = L;
    j["C"] = C;
    j["tau"] = tau;
    j["anchors"] = anchors;
    j["saliency"] = saliency;
    j["clusters"] = clusters;
    j["token_count"] = tok.anchors.size();
    if (emit_tokens) {
        const Tensor& E = tok.tokens.value();
        json rows = json::array();
        for (std::size_t r = 0; r < E.shape()[0]; ++r) {
            json row = json::array();
            for (std::size_t c = 0; c < E.shape()[1]; ++c) row.push_back(E.at2(r, c));
            rows.push_back(row);
        }
        j["tokens"] = rows;
    }
    return j.dump(2);
}

} // namespace dywave
