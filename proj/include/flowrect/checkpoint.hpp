#ifndef FLOWRECT_CHECKPOINT_HPP
#define FLOWRECT_CHECKPOINT_HPP

#include <filesystem>

#include "flowrect/tensor_io.hpp"
#include "flowrect/toy_net.hpp"

namespace flowrect {

// Weights plus everything needed to reproduce them.
struct ModelCheckpoint {
    ToyNetDescriptor desc;
    ToyNet<float> net;
    std::uint64_t train_step = 0;
    std::uint64_t seed = 0;
    std::string optimizer_note;  // recorded coefficients, e.g. "adam beta1=0.9 ..."

    ModelCheckpoint() : net(desc) {}
    explicit ModelCheckpoint(ToyNet<float> n) : desc(n.desc), net(std::move(n)) {}
};

inline void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
    std::string descriptor = ckpt.desc.to_text();
    descriptor += "train_step=" + std::to_string(ckpt.train_step) + "\n";
    descriptor += "seed=" + std::to_string(ckpt.seed) + "\n";
    descriptor += "optimizer=" + ckpt.optimizer_note + "\n";

    std::vector<NamedTensor> entries;
    auto refs = const_cast<ModelCheckpoint&>(ckpt).net.params();
    for (auto& p : refs) {
        RawTensor t;
        t.dims = p.dims;
        t.data.assign(p.data, p.data + p.size);
        entries.push_back({p.name, std::move(t)});
    }
    atomic_write(path, [&](const std::filesystem::path& tmp) {
        save_bundle(tmp, descriptor, entries);
    });
}

// The architecture descriptor fully determines array shapes; any mismatch
// between declared dims and stored entries is rejected.
inline ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
    Bundle b = load_bundle(path);
    auto kv = ToyNetDescriptor::parse_kv(b.descriptor);
    ModelCheckpoint ckpt(ToyNet<float>(ToyNetDescriptor::from_text(b.descriptor)));
    if (kv.count("train_step")) ckpt.train_step = std::stoull(kv["train_step"]);
    if (kv.count("seed")) ckpt.seed = std::stoull(kv["seed"]);
    if (kv.count("optimizer")) ckpt.optimizer_note = kv["optimizer"];

    for (auto& p : ckpt.net.params()) {
        const NamedTensor* e = b.find(p.name);
        if (!e) throw FormatError("checkpoint missing parameter '" + p.name + "'", 0);
        if (e->tensor.dims != p.dims)
            throw ShapeError("checkpoint parameter '" + p.name + "' has wrong shape");
        std::copy(e->tensor.data.begin(), e->tensor.data.end(), p.data);
    }
    return ckpt;
}

}  // namespace flowrect

#endif
