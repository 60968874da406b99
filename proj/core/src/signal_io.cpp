#include "dywave/signal_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace dywave {

namespace {

constexpr char kMagic[4] = {'D', 'Y', 'W', 'V'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError(path + ": truncated signal file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path + ": read failed");
    return ss.str();
}

void spew(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw IoError(path + ": write failed");
}

void check_plane(const Tensor& X, const std::string& what) {
    if (X.shape().size() != 2)
        throw IoError(what + ": expected a [channels x length] tensor, got shape " +
                      X.shape_str());
    for (std::size_t i = 0; i < X.numel(); ++i)
        if (!std::isfinite(X[i])) throw IoError(what + ": non-finite sample value");
}

} // namespace

void write_signal(const std::string& path, const Tensor& X) {
    check_plane(X, path);
    std::string buf;
    buf.reserve(20 + 4 * X.numel());
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(X.shape()[0]));
    put_u64(buf, static_cast<std::uint64_t>(X.shape()[1]));
    for (std::size_t i = 0; i < X.numel(); ++i) put_f32(buf, static_cast<float>(X[i]));
    spew(path, buf);
}

Tensor read_signal(const std::string& path) {
    std::string buf = slurp(path);
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        return read_signal_csv(path);
    Reader r{buf, 4, path};
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError(path + ": unsupported signal format version " + std::to_string(version));
    std::uint32_t C = r.u32();
    std::uint64_t L = r.u64();
    if (C == 0 || L == 0) throw IoError(path + ": empty signal dimensions");
    if (buf.size() - r.pos != 4ull * C * L)
        throw IoError(path + ": payload size does not match header");
    Tensor X = Tensor::zeros({C, static_cast<std::size_t>(L)});
    for (std::size_t i = 0; i < X.numel(); ++i) {
        double v = static_cast<double>(r.f32());
        if (!std::isfinite(v)) throw IoError(path + ": non-finite sample value");
        X[i] = v;
    }
    return X;
}

void write_signal_csv(const std::string& path, const Tensor& X) {
    check_plane(X, path);
    std::size_t C = X.shape()[0], L = X.shape()[1];
    std::ostringstream ss;
    for (std::size_t c = 0; c < C; ++c) ss << (c ? ",c" : "c") << c;
    ss << "\n";
    char num[48];
    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t c = 0; c < C; ++c) {
            // %.9g round-trips the 32-bit storage used by the binary form
            std::snprintf(num, sizeof(num), "%.9g", static_cast<double>(static_cast<float>(X.at2(c, t))));
            if (c) ss << ',';
            ss << num;
        }
        ss << "\n";
    }
    spew(path, ss.str());
}

Tensor read_signal_csv(const std::string& path) {
    std::string buf = slurp(path);
    std::istringstream in(buf);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t C = 0;
    {
        std::istringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) {
            if (cell != "c" + std::to_string(C))
                throw IoError(path + ": CSV header must read c0,c1,...");
            ++C;
        }
    }
    if (C == 0) throw IoError(path + ": CSV header names no channels");
    std::vector<double> vals;
    std::size_t L = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t got = 0;
        while (std::getline(ls, cell, ',')) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw IoError(path + ": bad CSV number '" + cell + "'");
            }
            if (used != cell.size()) throw IoError(path + ": bad CSV number '" + cell + "'");
            if (!std::isfinite(v)) throw IoError(path + ": non-finite sample value");
            vals.push_back(v);
            ++got;
        }
        if (got != C)
            throw IoError(path + ": CSV row " + std::to_string(L + 2) + " has " +
                          std::to_string(got) + " cells, expected " + std::to_string(C));
        ++L;
    }
    if (L == 0) throw IoError(path + ": CSV has no data rows");
    Tensor X = Tensor::zeros({C, L});
    for (std::size_t t = 0; t < L; ++t)
        for (std::size_t c = 0; c < C; ++c) X.at2(c, t) = vals[t * C + c];
    return X;
}

} // namespace dywave
