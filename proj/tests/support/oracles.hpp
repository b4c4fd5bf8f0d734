#pragma once

// Straightforward reference implementations used as test oracles. They share
// no code with the library.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace addrparse::testing {

// Splits UTF-8 into code points (input assumed well formed).
inline std::vector<std::string> code_points(const std::string& s) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        const std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : 4;
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

// BPE by brute force: every word occurrence is kept as its own symbol list and
// pairs are recounted from scratch before every merge.
struct BruteForceBpe {
    std::vector<std::pair<std::string, std::string>> merges;

    static std::vector<std::string> initial(const std::string& word) {
        auto s = code_points(word);
        s.push_back("</w>");
        return s;
    }

    static void apply(std::vector<std::string>& s, const std::pair<std::string, std::string>& m) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < s.size();) {
            if (i + 1 < s.size() && s[i] == m.first && s[i + 1] == m.second) {
                out.push_back(s[i] + s[i + 1]);
                i += 2;
            } else {
                out.push_back(s[i]);
                ++i;
            }
        }
        s = std::move(out);
    }

    BruteForceBpe(const std::vector<std::string>& words, int num_merges) {
        std::vector<std::vector<std::string>> seqs;
        for (const auto& w : words) seqs.push_back(initial(w));
        for (int step = 0; step < num_merges; ++step) {
            std::map<std::pair<std::string, std::string>, long> counts;
            for (const auto& s : seqs) {
                for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[{s[i], s[i + 1]}];
            }
            std::pair<std::string, std::string> best;
            long best_count = 0;
            for (const auto& [pair, count] : counts) {  // map order gives the lexicographic tie-break
                if (count > best_count) {
                    best = pair;
                    best_count = count;
                }
            }
            if (best_count < 2) break;
            merges.push_back(best);
            for (auto& s : seqs) apply(s, best);
        }
    }

    std::vector<std::string> segment(const std::string& word) const {
        auto s = initial(word);
        for (const auto& m : merges) apply(s, m);
        return s;
    }
};

// Scalar LSTM step with gate order i, f, g, o; W rows are gates, columns inputs.
struct RefLstmOut {
    std::vector<double> h, c;
};

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename M>
RefLstmOut ref_lstm_step(const std::vector<double>& x, const std::vector<double>& h,
                         const std::vector<double>& c, const M& wi, const M& wh, const M& b) {
    const std::size_t H = h.size();
    std::vector<double> z(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
        double acc = b(0, static_cast<long>(r));
        for (std::size_t k = 0; k < x.size(); ++k) acc += wi(static_cast<long>(r), static_cast<long>(k)) * x[k];
        for (std::size_t k = 0; k < H; ++k) acc += wh(static_cast<long>(r), static_cast<long>(k)) * h[k];
        z[r] = acc;
    }
    RefLstmOut out{std::vector<double>(H), std::vector<double>(H)};
    for (std::size_t j = 0; j < H; ++j) {
        const double i = ref_sigmoid(z[j]);
        const double f = ref_sigmoid(z[H + j]);
        const double g = std::tanh(z[2 * H + j]);
        const double o = ref_sigmoid(z[3 * H + j]);
        out.c[j] = f * c[j] + i * g;
        out.h[j] = o * std::tanh(out.c[j]);
    }
    return out;
}

// Pooled two-proportion z computed in extended precision.
inline double ref_z(double k1, double n1, double k2, double n2) {
    const long double p1 = static_cast<long double>(k1) / n1;
    const long double p2 = static_cast<long double>(k2) / n2;
    const long double p = (static_cast<long double>(k1) + k2) / (static_cast<long double>(n1) + n2);
    if (p <= 0 || p >= 1) return 0.0;
    const long double se = std::sqrt(p * (1 - p) * (1.0L / n1 + 1.0L / n2));
    return static_cast<double>((p1 - p2) / se);
}

}  // namespace addrparse::testing
