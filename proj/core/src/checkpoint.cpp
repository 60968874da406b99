#include "dywave/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dywave/signal_io.hpp"

namespace dywave {

namespace {

constexpr char kMagic[4] = {'D', 'Y', 'W', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(buf, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& path;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw IoError(path + ": truncated checkpoint");
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
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     const ParamStore& params) {
    std::string config_json = to_json(cfg);
    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u64(buf, config_json.size());
    buf += config_json;
    put_u32(buf, static_cast<std::uint32_t>(params.items().size()));
    for (const auto& [name, t] : params.items()) {
        put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf += name;
        put_u32(buf, static_cast<std::uint32_t>(t.shape().size()));
        for (std::size_t d : t.shape()) put_u64(buf, d);
        for (std::size_t i = 0; i < t.numel(); ++i) put_f64(buf, t[i]);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path + ": cannot open for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.flush();
    if (!out) throw IoError(path + ": write failed");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path + ": read failed");
    std::string buf = ss.str();

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw IoError(path + ": not a checkpoint file (bad magic)");
    Reader r{buf, 4, path};
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw IoError(path + ": unsupported checkpoint version " + std::to_string(version));

    Checkpoint ck;
    std::uint64_t cfg_len = r.u64();
    std::string config_json = r.bytes(cfg_len);
    try {
        ck.cfg = train_config_from_json(config_json);
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(path + ": embedded config rejected: " + e.what());
    }

    std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        std::uint32_t name_len = r.u32();
        std::string name = r.bytes(name_len);
        std::uint32_t ndim = r.u32();
        if (ndim == 0 || ndim > 4)
            throw IoError(path + ": parameter '" + name + "' has bad rank " +
                          std::to_string(ndim));
        std::vector<std::size_t> shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) {
            std::uint64_t v = r.u64();
            if (v == 0) throw IoError(path + ": parameter '" + name + "' has a zero dim");
            shape[d] = static_cast<std::size_t>(v);
        }
        Tensor t = Tensor::zeros(shape);
        for (std::size_t k = 0; k < t.numel(); ++k) t[k] = r.f64();
        ck.params.emplace_back(std::move(name), std::move(t));
    }
    if (r.pos != buf.size()) throw IoError(path + ": trailing bytes after parameters");
    return ck;
}

Model restore_model(const Checkpoint& ck) {
    Model model(ck.cfg.model);
    auto& items = model.params().items();
    if (items.size() != ck.params.size())
        throw CheckpointError("checkpoint holds " + std::to_string(ck.params.size()) +
                              " parameters but the config builds " +
                              std::to_string(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].first != ck.params[i].first)
            throw CheckpointError("parameter " + std::to_string(i) + " is '" +
                                  ck.params[i].first + "' but the config expects '" +
                                  items[i].first + "'");
        if (!items[i].second.same_shape(ck.params[i].second))
            throw CheckpointError("parameter '" + items[i].first + "' has shape " +
                                  ck.params[i].second.shape_str() + " but the config expects " +
                                  items[i].second.shape_str());
        items[i].second = ck.params[i].second;
    }
    return model;
}

} // namespace dywave
