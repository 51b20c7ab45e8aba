#include "duplex/lstm.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "duplex/errors.hpp"

namespace duplex {

LstmParams LstmParams::init(int input_dim, int hidden, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    auto uniform_fill = [&](auto& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    };
    LstmParams p;
    p.w_input.resize(4 * hidden, input_dim);
    p.w_recur.resize(4 * hidden, hidden);
    p.bias.resize(4 * hidden);
    p.readout_w.resize(hidden);
    uniform_fill(p.w_input);
    uniform_fill(p.w_recur);
    uniform_fill(p.bias);
    uniform_fill(p.readout_w);
    p.readout_b = bound * (2.0 * rng.uniform() - 1.0);
    p.bias.segment(hidden, hidden).setOnes();  // forget gate starts open
    return p;
}

LstmGrads LstmGrads::zeros_like(const LstmParams& p) {
    LstmGrads g;
    g.w_input = Eigen::MatrixXd::Zero(p.w_input.rows(), p.w_input.cols());
    g.w_recur = Eigen::MatrixXd::Zero(p.w_recur.rows(), p.w_recur.cols());
    g.bias = Eigen::VectorXd::Zero(p.bias.size());
    g.readout_w = Eigen::RowVectorXd::Zero(p.readout_w.size());
    g.readout_b = 0.0;
    return g;
}

void LstmGrads::setZero() {
    w_input.setZero();
    w_recur.setZero();
    bias.setZero();
    readout_w.setZero();
    readout_b = 0.0;
}

bool LstmGrads::allFinite() const {
    return w_input.allFinite() && w_recur.allFinite() && bias.allFinite() &&
           readout_w.allFinite() && std::isfinite(readout_b);
}

namespace {

inline Eigen::ArrayXd sigmoid_array(const Eigen::ArrayXd& z) {
    return 1.0 / (1.0 + (-z).exp());
}

}  // namespace

Eigen::VectorXd lstm_forward(const LstmParams& params, const Eigen::MatrixXd& features,
                             LstmCache* cache) {
    const auto T = features.rows();
    const int H = params.hidden();
    if (features.cols() != params.input_dim())
        throw ValidationError("lstm_forward: feature dim " + std::to_string(features.cols()) +
                              " != parameter input dim " + std::to_string(params.input_dim()));

    if (cache) {
        cache->gate_i.resize(H, T);
        cache->gate_f.resize(H, T);
        cache->gate_g.resize(H, T);
        cache->gate_o.resize(H, T);
        cache->cell.resize(H, T);
        cache->cell_tanh.resize(H, T);
        cache->hidden.resize(H, T);
    }

    Eigen::VectorXd logits(T);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
    for (Eigen::Index t = 0; t < T; ++t) {
        const Eigen::VectorXd z =
            params.w_input * features.row(t).transpose() + params.w_recur * h + params.bias;
        const Eigen::ArrayXd i = sigmoid_array(z.segment(0, H).array());
        const Eigen::ArrayXd f = sigmoid_array(z.segment(H, H).array());
        const Eigen::ArrayXd g = z.segment(2 * H, H).array().tanh();
        const Eigen::ArrayXd o = sigmoid_array(z.segment(3 * H, H).array());
        c = (f * c.array() + i * g).matrix();
        const Eigen::ArrayXd ct = c.array().tanh();
        h = (o * ct).matrix();
        if (!c.allFinite() || !h.allFinite())
            throw NumericFault("lstm_forward: non-finite state at frame " + std::to_string(t));
        logits(t) = params.readout_w * h + params.readout_b;
        if (cache) {
            cache->gate_i.col(t) = i.matrix();
            cache->gate_f.col(t) = f.matrix();
            cache->gate_g.col(t) = g.matrix();
            cache->gate_o.col(t) = o.matrix();
            cache->cell.col(t) = c;
            cache->cell_tanh.col(t) = ct.matrix();
            cache->hidden.col(t) = h;
        }
    }
    return logits;
}

LstmGrads lstm_backward(const LstmParams& params, const Eigen::MatrixXd& features,
                        const LstmCache& cache, const Eigen::VectorXd& dlogits) {
    const auto T = features.rows();
    const int H = params.hidden();
    if (dlogits.size() != T) throw ValidationError("lstm_backward: dlogits length mismatch");

    LstmGrads grads = LstmGrads::zeros_like(params);
    Eigen::VectorXd dh = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dz(4 * H);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const auto h_t = cache.hidden.col(t);
        grads.readout_w += dlogits(t) * h_t.transpose();
        grads.readout_b += dlogits(t);
        dh += params.readout_w.transpose() * dlogits(t);

        const auto i = cache.gate_i.col(t).array();
        const auto f = cache.gate_f.col(t).array();
        const auto g = cache.gate_g.col(t).array();
        const auto o = cache.gate_o.col(t).array();
        const auto ct = cache.cell_tanh.col(t).array();

        const Eigen::ArrayXd do_ = dh.array() * ct;
        dc.array() += dh.array() * o * (1.0 - ct.square());

        const Eigen::ArrayXd di = dc.array() * g;
        const Eigen::ArrayXd dg = dc.array() * i;
        const Eigen::ArrayXd c_prev =
            t > 0 ? cache.cell.col(t - 1).array() : Eigen::ArrayXd::Zero(H).eval();
        const Eigen::ArrayXd df = dc.array() * c_prev;

        dz.segment(0, H) = (di * i * (1.0 - i)).matrix();
        dz.segment(H, H) = (df * f * (1.0 - f)).matrix();
        dz.segment(2 * H, H) = (dg * (1.0 - g.square())).matrix();
        dz.segment(3 * H, H) = (do_ * o * (1.0 - o)).matrix();

        grads.w_input += dz * features.row(t);
        if (t > 0) grads.w_recur += dz * cache.hidden.col(t - 1).transpose();
        grads.bias += dz;

        dh = params.w_recur.transpose() * dz;
        dc = (dc.array() * f).matrix();
    }
    return grads;
}

namespace {

void write_f32_payload(const std::filesystem::path& path, const double* data, std::size_t count) {
    std::vector<unsigned char> bytes;
    bytes.reserve(count * 4);
    for (std::size_t k = 0; k < count; ++k) {
        const auto word = std::bit_cast<std::uint32_t>(static_cast<float>(data[k]));
        bytes.push_back(static_cast<unsigned char>(word & 0xff));
        bytes.push_back(static_cast<unsigned char>((word >> 8) & 0xff));
        bytes.push_back(static_cast<unsigned char>((word >> 16) & 0xff));
        bytes.push_back(static_cast<unsigned char>((word >> 24) & 0xff));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write: " + path.string());
}

void read_f32_payload(const std::filesystem::path& path, double* data, std::size_t count) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open for reading: " + path.string());
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size != count * 4)
        throw SizeMismatchError(path.filename().string() + ": expected " +
                                std::to_string(count * 4) + " bytes, found " + std::to_string(size));
    in.seekg(0);
    std::vector<unsigned char> bytes(size);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    for (std::size_t k = 0; k < count; ++k) {
        const unsigned char* p = bytes.data() + 4 * k;
        const std::uint32_t word = static_cast<std::uint32_t>(p[0]) |
                                   (static_cast<std::uint32_t>(p[1]) << 8) |
                                   (static_cast<std::uint32_t>(p[2]) << 16) |
                                   (static_cast<std::uint32_t>(p[3]) << 24);
        const float v = std::bit_cast<float>(word);
        if (!std::isfinite(v))
            throw NonFiniteError(path.filename().string() + ": non-finite value at index " +
                                 std::to_string(k));
        data[k] = static_cast<double>(v);
    }
}

}  // namespace

void save_lstm_params(const LstmParams& params, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest = {
        {"format_version", 1},
        {"input_dim", params.input_dim()},
        {"hidden", params.hidden()},
        {"readout_b", params.readout_b},
    };
    std::ofstream mf(dir / "params.json", std::ios::trunc);
    if (!mf) throw DataError("cannot open for writing: " + (dir / "params.json").string());
    mf << manifest.dump(2) << "\n";

    write_f32_payload(dir / "w_input.f32", params.w_input.data(),
                      static_cast<std::size_t>(params.w_input.size()));
    write_f32_payload(dir / "w_recur.f32", params.w_recur.data(),
                      static_cast<std::size_t>(params.w_recur.size()));
    write_f32_payload(dir / "bias.f32", params.bias.data(),
                      static_cast<std::size_t>(params.bias.size()));
    write_f32_payload(dir / "readout_w.f32", params.readout_w.data(),
                      static_cast<std::size_t>(params.readout_w.size()));
}

LstmParams load_lstm_params(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "params.json");
    if (!mf) throw ManifestError("cannot open " + (dir / "params.json").string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(mf);
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("malformed params.json: " + std::string(e.what()));
    }
    const int input_dim = manifest.at("input_dim").get<int>();
    const int hidden = manifest.at("hidden").get<int>();
    if (input_dim < 1 || hidden < 1) throw ManifestError("params.json: bad dims");

    LstmParams p;
    p.w_input.resize(4 * hidden, input_dim);
    p.w_recur.resize(4 * hidden, hidden);
    p.bias.resize(4 * hidden);
    p.readout_w.resize(hidden);
    p.readout_b = manifest.at("readout_b").get<double>();
    read_f32_payload(dir / "w_input.f32", p.w_input.data(),
                     static_cast<std::size_t>(p.w_input.size()));
    read_f32_payload(dir / "w_recur.f32", p.w_recur.data(),
                     static_cast<std::size_t>(p.w_recur.size()));
    read_f32_payload(dir / "bias.f32", p.bias.data(), static_cast<std::size_t>(p.bias.size()));
    read_f32_payload(dir / "readout_w.f32", p.readout_w.data(),
                     static_cast<std::size_t>(p.readout_w.size()));
    return p;
}

}  // namespace duplex
