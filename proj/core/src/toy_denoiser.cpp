#include "zstyle/toy_denoiser.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "zstyle/attention.hpp"
#include "zstyle/rng.hpp"
#include "zstyle/tensor_io.hpp"

namespace zstyle {

namespace {

Tensor gaussian_tensor(std::vector<std::size_t> shape, Rng& rng, double scale) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.next_gaussian() * scale;
    return t;
}

void add_row_broadcast(Tensor& m, const Tensor& row) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += row[j];
}

Tensor colsum(const Tensor& m) {
    Tensor out({m.cols()});
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m(i, j);
    return out;
}

}  // namespace

Tensor patchify(const Tensor& image, int patch) {
    if (image.rank() != 3) throw ShapeError("patchify expects an [H, W, C] tensor");
    if (patch < 1) throw ConfigError("patch size must be positive");
    const std::size_t h = image.extent(0), w = image.extent(1), c = image.extent(2);
    const std::size_t p = static_cast<std::size_t>(patch);
    if (h % p != 0 || w % p != 0) throw ConfigError("image extents must be divisible by patch size");
    const std::size_t gh = h / p, gw = w / p;
    Tensor tokens({gh * gw, p * p * c});
    for (std::size_t by = 0; by < gh; ++by)
        for (std::size_t bx = 0; bx < gw; ++bx) {
            const std::size_t n = by * gw + bx;
            for (std::size_t py = 0; py < p; ++py)
                for (std::size_t px = 0; px < p; ++px)
                    for (std::size_t ch = 0; ch < c; ++ch)
                        tokens(n, (py * p + px) * c + ch) = image(by * p + py, bx * p + px, ch);
        }
    return tokens;
}

Tensor unpatchify(const Tensor& tokens, std::size_t h, std::size_t w, std::size_t c, int patch) {
    const std::size_t p = static_cast<std::size_t>(patch);
    if (tokens.rank() != 2) throw ShapeError("unpatchify expects a rank-2 token matrix");
    if (h % p != 0 || w % p != 0) throw ConfigError("image extents must be divisible by patch size");
    const std::size_t gh = h / p, gw = w / p;
    if (tokens.rows() != gh * gw || tokens.cols() != p * p * c)
        throw ShapeError("token matrix does not match the target image extents");
    Tensor image({h, w, c});
    for (std::size_t by = 0; by < gh; ++by)
        for (std::size_t bx = 0; bx < gw; ++bx) {
            const std::size_t n = by * gw + bx;
            for (std::size_t py = 0; py < p; ++py)
                for (std::size_t px = 0; px < p; ++px)
                    for (std::size_t ch = 0; ch < c; ++ch)
                        image(by * p + py, bx * p + px, ch) = tokens(n, (py * p + px) * c + ch);
        }
    return image;
}

ToyDenoiser ToyDenoiser::init(const ToyDenoiserConfig& cfg, std::uint64_t seed) {
    if (cfg.patch < 1 || cfg.embed_dim < 1 || cfg.hidden < 1 || cfg.num_blocks < 1 ||
        cfg.steps < 1 || cfg.channels < 1)
        throw ConfigError("toy denoiser dimensions must be positive");
    Rng rng(seed, 0x70D0);
    const std::size_t p2c = static_cast<std::size_t>(cfg.patch) * cfg.patch * cfg.channels;
    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    const std::size_t h = static_cast<std::size_t>(cfg.hidden);
    ToyDenoiser m;
    m.cfg = cfg;
    m.w_in = gaussian_tensor({p2c, d}, rng, 1.0 / std::sqrt(static_cast<double>(p2c)));
    m.b_in = Tensor({d});
    m.time_emb = gaussian_tensor({static_cast<std::size_t>(cfg.steps) + 1, d}, rng, 0.1);
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    const double sh = 1.0 / std::sqrt(static_cast<double>(h));
    for (int b = 0; b < cfg.num_blocks; ++b) {
        BlockWeights bw;
        bw.wq = gaussian_tensor({d, d}, rng, sd);
        bw.wk = gaussian_tensor({d, d}, rng, sd);
        bw.wv = gaussian_tensor({d, d}, rng, sd);
        bw.wo = gaussian_tensor({d, d}, rng, sd);
        bw.w1 = gaussian_tensor({d, h}, rng, sd);
        bw.b1 = Tensor({h});
        bw.w2 = gaussian_tensor({h, d}, rng, sh);
        bw.b2 = Tensor({d});
        m.blocks.push_back(std::move(bw));
    }
    m.w_out = gaussian_tensor({d, p2c}, rng, sd);
    m.b_out = Tensor({p2c});
    return m;
}

Tensor ToyDenoiser::forward(const Tensor& x_t, int t, const AttentionOverride* overrides,
                            TapRequest* taps) const {
    if (x_t.rank() != 3) throw ShapeError("toy denoiser input must be [H, W, C]");
    if (static_cast<int>(x_t.extent(2)) != cfg.channels)
        throw ConfigError("input channel count does not match the model");
    if (t < 0 || t > cfg.steps) throw DomainError("timestep outside the model's range");
    const std::size_t h = x_t.extent(0), w = x_t.extent(1), c = x_t.extent(2);

    Tensor tokens = patchify(x_t, cfg.patch);
    Tensor e = matmul(tokens, w_in);
    add_row_broadcast(e, b_in);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.cols(); ++j) e(i, j) += time_emb(static_cast<std::size_t>(t), j);

    for (int b = 0; b < cfg.num_blocks; ++b) {
        const BlockWeights& bw = blocks[static_cast<std::size_t>(b)];
        Tensor q = matmul(e, bw.wq);
        Tensor k = matmul(e, bw.wk);
        Tensor v = matmul(e, bw.wv);
        if (taps != nullptr && taps->blocks.count(b) != 0) taps->taps[b] = BlockTaps{q, k, v};
        Tensor a;
        const BlockOverride* ovr = nullptr;
        if (overrides != nullptr) {
            auto it = overrides->find(b);
            if (it != overrides->end()) ovr = &it->second;
        }
        a = ovr != nullptr ? (*ovr)(q, k, v) : attend(q, k, v);
        if (!a.same_shape(q)) throw ContractError("attention override returned a mismatched shape");
        e += matmul(a, bw.wo);
        Tensor hmid = matmul(e, bw.w1);
        add_row_broadcast(hmid, bw.b1);
        for (std::size_t i = 0; i < hmid.size(); ++i) hmid[i] = std::tanh(hmid[i]);
        Tensor mlp = matmul(hmid, bw.w2);
        add_row_broadcast(mlp, bw.b2);
        e += mlp;
    }

    Tensor y = matmul(e, w_out);
    add_row_broadcast(y, b_out);
    return unpatchify(y, h, w, c, cfg.patch);
}

Denoiser ToyDenoiser::as_denoiser() const {
    return Denoiser{[this](const Tensor& x, int t) { return forward(x, t); }};
}

ToyDenoiser ToyDenoiser::zeros_like() const {
    ToyDenoiser z = *this;
    for (Tensor* p : z.parameters())
        for (std::size_t i = 0; i < p->size(); ++i) (*p)[i] = 0.0;
    return z;
}

std::vector<Tensor*> ToyDenoiser::parameters() {
    std::vector<Tensor*> out{&w_in, &b_in, &time_emb};
    for (BlockWeights& b : blocks) {
        out.push_back(&b.wq);
        out.push_back(&b.wk);
        out.push_back(&b.wv);
        out.push_back(&b.wo);
        out.push_back(&b.w1);
        out.push_back(&b.b1);
        out.push_back(&b.w2);
        out.push_back(&b.b2);
    }
    out.push_back(&w_out);
    out.push_back(&b_out);
    return out;
}

std::vector<const Tensor*> ToyDenoiser::parameters() const {
    auto mut = const_cast<ToyDenoiser*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

void save_toy_denoiser(const std::string& path, const ToyDenoiser& model) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "ZTOY " << model.cfg.patch << ' ' << model.cfg.embed_dim << ' ' << model.cfg.num_blocks
      << ' ' << model.cfg.steps << '\n';
    for (const Tensor* p : model.parameters()) write_zten(f, *p);
    if (!f) throw IoError("failed writing weights: " + path);
}

ToyDenoiser load_toy_denoiser(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError("missing ZTOY header: " + path);
    std::istringstream hdr(line);
    std::string magic;
    ToyDenoiserConfig cfg;
    if (!(hdr >> magic >> cfg.patch >> cfg.embed_dim >> cfg.num_blocks >> cfg.steps) ||
        magic != "ZTOY")
        throw IoError("bad ZTOY header: " + path);
    ToyDenoiser m;
    m.cfg = cfg;
    m.w_in = read_zten(f);
    m.b_in = read_zten(f);
    m.time_emb = read_zten(f);
    m.blocks.resize(static_cast<std::size_t>(cfg.num_blocks));
    for (BlockWeights& b : m.blocks) {
        b.wq = read_zten(f);
        b.wk = read_zten(f);
        b.wv = read_zten(f);
        b.wo = read_zten(f);
        b.w1 = read_zten(f);
        b.b1 = read_zten(f);
        b.w2 = read_zten(f);
        b.b2 = read_zten(f);
    }
    m.w_out = read_zten(f);
    m.b_out = read_zten(f);

    const std::size_t p2 = static_cast<std::size_t>(cfg.patch) * cfg.patch;
    if (m.w_in.rank() != 2 || m.w_in.rows() % p2 != 0)
        throw IoError("ZTOY embed matrix inconsistent with patch size");
    m.cfg.channels = static_cast<int>(m.w_in.rows() / p2);
    m.cfg.hidden = static_cast<int>(m.blocks.front().b1.size());
    const std::size_t d = static_cast<std::size_t>(cfg.embed_dim);
    if (m.w_in.cols() != d || m.w_out.rows() != d || m.w_out.cols() != m.w_in.rows() ||
        m.time_emb.rows() != static_cast<std::size_t>(cfg.steps) + 1 || m.time_emb.cols() != d)
        throw IoError("ZTOY tensor shapes inconsistent with header");
    for (const BlockWeights& b : m.blocks)
        if (b.wq.rows() != d || b.wq.cols() != d || b.wo.rows() != d || b.wo.cols() != d)
            throw IoError("ZTOY projection matrices must be d x d");
    return m;
}

double loss_and_gradients(const ToyDenoiser& model, const Tensor& x0, int t, const Tensor& z,
                          const NoiseSchedule& sched, ToyDenoiser* grads) {
    const ToyDenoiserConfig& cfg = model.cfg;
    Tensor x_t = forward_noise(x0, t, z, sched);
    const std::size_t h = x_t.extent(0), w = x_t.extent(1), c = x_t.extent(2);
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));

    // Forward pass with cached intermediates.
    Tensor tokens = patchify(x_t, cfg.patch);
    Tensor e = matmul(tokens, model.w_in);
    add_row_broadcast(e, model.b_in);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.cols(); ++j)
            e(i, j) += model.time_emb(static_cast<std::size_t>(t), j);

    struct BlockCache {
        Tensor e_in, q, k, v, probs, attn, e_mid, z_act;
    };
    std::vector<BlockCache> cache(static_cast<std::size_t>(cfg.num_blocks));
    for (int b = 0; b < cfg.num_blocks; ++b) {
        BlockCache& bc = cache[static_cast<std::size_t>(b)];
        const BlockWeights& bw = model.blocks[static_cast<std::size_t>(b)];
        bc.e_in = e;
        bc.q = matmul(e, bw.wq);
        bc.k = matmul(e, bw.wk);
        bc.v = matmul(e, bw.wv);
        Tensor s = matmul(bc.q, transpose(bc.k));
        s *= inv_sqrt_d;
        bc.probs = softmax_rows(s);
        bc.attn = matmul(bc.probs, bc.v);
        e += matmul(bc.attn, bw.wo);
        bc.e_mid = e;
        Tensor hmid = matmul(e, bw.w1);
        add_row_broadcast(hmid, bw.b1);
        for (std::size_t i = 0; i < hmid.size(); ++i) hmid[i] = std::tanh(hmid[i]);
        bc.z_act = hmid;
        Tensor mlp = matmul(hmid, bw.w2);
        add_row_broadcast(mlp, bw.b2);
        e += mlp;
    }
    Tensor y = matmul(e, model.w_out);
    add_row_broadcast(y, model.b_out);
    Tensor eps = unpatchify(y, h, w, c, cfg.patch);

    const double m_count = static_cast<double>(eps.size());
    double loss = 0.0;
    Tensor d_eps = eps;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double r = eps[i] - z[i];
        loss += r * r;
        d_eps[i] = 2.0 * r / m_count;
    }
    loss /= m_count;
    if (grads == nullptr) return loss;

    // Backward pass.
    Tensor dy = patchify(d_eps, cfg.patch);
    grads->w_out += matmul(transpose(e), dy);
    grads->b_out += colsum(dy);
    Tensor de = matmul(dy, transpose(model.w_out));

    for (int b = cfg.num_blocks - 1; b >= 0; --b) {
        BlockCache& bc = cache[static_cast<std::size_t>(b)];
        const BlockWeights& bw = model.blocks[static_cast<std::size_t>(b)];
        BlockWeights& gw = grads->blocks[static_cast<std::size_t>(b)];

        // e_out = e_mid + tanh(e_mid w1 + b1) w2 + b2
        Tensor dz = matmul(de, transpose(bw.w2));
        gw.w2 += matmul(transpose(bc.z_act), de);
        gw.b2 += colsum(de);
        Tensor dh = dz;
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= 1.0 - bc.z_act[i] * bc.z_act[i];
        gw.w1 += matmul(transpose(bc.e_mid), dh);
        gw.b1 += colsum(dh);
        Tensor de_mid = de + matmul(dh, transpose(bw.w1));

        // e_mid = e_in + (probs v) wo
        gw.wo += matmul(transpose(bc.attn), de_mid);
        Tensor da = matmul(de_mid, transpose(bw.wo));
        Tensor dp = matmul(da, transpose(bc.v));
        Tensor dv = matmul(transpose(bc.probs), da);
        // Softmax backward, row-wise.
        Tensor ds = dp;
        for (std::size_t i = 0; i < ds.rows(); ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < ds.cols(); ++j) dot += dp(i, j) * bc.probs(i, j);
            for (std::size_t j = 0; j < ds.cols(); ++j)
                ds(i, j) = bc.probs(i, j) * (dp(i, j) - dot);
        }
        Tensor dq = matmul(ds, bc.k);
        dq *= inv_sqrt_d;
        Tensor dk = matmul(transpose(ds), bc.q);
        dk *= inv_sqrt_d;
        gw.wq += matmul(transpose(bc.e_in), dq);
        gw.wk += matmul(transpose(bc.e_in), dk);
        gw.wv += matmul(transpose(bc.e_in), dv);
        de = de_mid + matmul(dq, transpose(bw.wq)) + matmul(dk, transpose(bw.wk)) +
             matmul(dv, transpose(bw.wv));
    }

    grads->w_in += matmul(transpose(tokens), de);
    Tensor de_cols = colsum(de);
    grads->b_in += de_cols;
    for (std::size_t j = 0; j < de_cols.size(); ++j)
        grads->time_emb(static_cast<std::size_t>(t), j) += de_cols[j];
    return loss;
}

TrainResult train(ToyDenoiser& model, const std::vector<Tensor>& dataset,
                  const NoiseSchedule& sched, int epochs, double lr, std::uint64_t seed) {
    if (dataset.empty()) throw TrainingError("training dataset is empty");
    if (epochs < 0) throw ConfigError("epoch count must be nonnegative");
    Rng rng(seed, 0x7EA1);
    TrainResult result;
    result.epoch_mse.reserve(static_cast<std::size_t>(epochs));
    ToyDenoiser grads = model.zeros_like();
    for (int epoch = 0; epoch < epochs; ++epoch) {
        double total = 0.0;
        for (const Tensor& x0 : dataset) {
            const int t = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(sched.steps())));
            Tensor z = Tensor::zeros_like(x0);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
            for (Tensor* g : grads.parameters())
                for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] = 0.0;
            double sample_loss = 0.0;
            try {
                sample_loss = loss_and_gradients(model, x0, t, z, sched, &grads);
            } catch (const DomainError&) {
                // Exploded weights surface as degenerate softmax rows.
                std::ostringstream msg;
                msg << "loss diverged at epoch " << epoch;
                throw TrainingError(msg.str());
            }
            if (!std::isfinite(sample_loss)) {
                std::ostringstream msg;
                msg << "loss diverged at epoch " << epoch;
                throw TrainingError(msg.str());
            }
            total += sample_loss;
            auto params = model.parameters();
            auto gs = grads.parameters();
            for (std::size_t pi = 0; pi < params.size(); ++pi)
                for (std::size_t i = 0; i < params[pi]->size(); ++i)
                    (*params[pi])[i] -= lr * (*gs[pi])[i];
        }
        result.epoch_mse.push_back(total / static_cast<double>(dataset.size()));
    }
    return result;
}

}  // namespace zstyle
