#include "dywave/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "dywave/rng.hpp"

namespace dywave {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

enum class Motif { square, dsine, chirp };

struct ClassSig {
    std::size_t nb_lo, nb_hi;   // bursts per sequence
    std::size_t dur_lo, dur_hi; // samples per burst
    Motif motif;
    bool alternate; // square/dsine alternation (dense class)
    double f_lo, f_hi;
};

ClassSig signature(std::size_t cls) {
    switch (cls % 4) {
        case 0: return {1, 2, 24, 40, Motif::square, false, 0.0, 0.0};
        case 1: return {4, 6, 32, 56, Motif::dsine, false, 0.06, 0.10};
        case 2: return {2, 3, 48, 80, Motif::chirp, false, 0.018, 0.025};
        default: return {7, 9, 10, 18, Motif::square, true, 0.15, 0.20};
    }
}

void add_burst(double* row, std::size_t L, std::size_t onset, std::size_t dur, Motif m,
               double amp, double f0, double f1) {
    for (std::size_t i = 0; i < dur && onset + i < L; ++i) {
        double x = static_cast<double>(i);
        double v = 0.0;
        switch (m) {
            case Motif::square:
                v = amp;
                break;
            case Motif::dsine:
                v = amp * std::exp(-3.0 * x / static_cast<double>(dur)) *
                    std::sin(kTwoPi * f0 * x);
                break;
            case Motif::chirp: {
                double phase = f0 * x + 0.5 * (f1 - f0) * x * x / static_cast<double>(dur);
                v = amp * std::sin(kTwoPi * phase);
                break;
            }
        }
        row[onset + i] += v;
    }
}

} // namespace

std::vector<Sample> gen_synthetic(const SynthSpec& spec) {
    if (spec.n_classes < 1 || spec.L < 8 || spec.C < 1)
        throw std::invalid_argument("synthetic: degenerate spec");
    // signatures are calibrated for L=512; stretch burst durations with L so
    // shorter or longer sequences keep the same class structure
    double time_scale = static_cast<double>(spec.L) / 512.0;
    auto scale_dur = [&](std::size_t d) {
        auto s = static_cast<std::size_t>(std::llround(static_cast<double>(d) * time_scale));
        return std::max<std::size_t>(4, s);
    };

    std::vector<Sample> out;
    out.reserve(spec.count);
    for (std::size_t idx = 0; idx < spec.count; ++idx) {
        Sample s;
        s.label = idx % spec.n_classes;
        Rng rng(Rng::mix(spec.seed, idx));
        s.X = Tensor({spec.C, spec.L});
        if (spec.noise_std > 0.0)
            for (std::size_t i = 0; i < s.X.numel(); ++i)
                s.X[i] = rng.normal(0.0, spec.noise_std);

        ClassSig sig = signature(s.label);
        if (spec.burst_scale == 0.0) {
            out.push_back(std::move(s));
            continue;
        }
        std::size_t nb = sig.nb_lo + rng.below(sig.nb_hi - sig.nb_lo + 1);
        std::size_t slot = spec.L / nb;
        std::size_t dur_lo = scale_dur(sig.dur_lo), dur_hi = scale_dur(sig.dur_hi);
        for (std::size_t b = 0; b < nb; ++b) {
            std::size_t dur = dur_lo + rng.below(dur_hi - dur_lo + 1);
            if (dur + 2 >= slot) dur = slot > 2 ? slot - 2 : 1;
            // keep gap_frac of the slot quiet, split across both sides
            std::size_t margin = static_cast<std::size_t>(spec.gap_frac * 0.5 *
                                                          static_cast<double>(slot));
            std::size_t lo = b * slot + margin;
            std::size_t hi_end = b * slot + slot - margin;
            std::size_t hi = hi_end > lo + dur ? hi_end - dur : lo;
            std::size_t onset = lo + (hi > lo ? rng.below(hi - lo + 1) : 0);
            double amp = spec.burst_scale * rng.uniform(0.8, 1.25);
            double f0 = sig.f_lo > 0.0 ? rng.uniform(sig.f_lo, sig.f_hi) : 0.0;
            double f1 = sig.motif == Motif::chirp ? rng.uniform(0.10, 0.14) : f0;
            Motif m = sig.alternate && (b % 2 == 1) ? Motif::dsine : sig.motif;
            for (std::size_t c = 0; c < spec.C; ++c)
                add_burst(s.X.data() + c * spec.L, spec.L, onset, dur, m,
                          amp * rng.uniform(0.9, 1.1), f0, f1);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace dywave
