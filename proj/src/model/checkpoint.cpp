#include "clgen/model/checkpoint.hpp"

#include "clgen/common/error.hpp"

#include <cstdint>
#include <fstream>

namespace clgen::model {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'G', 'E', 'N', 'C', 'K', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw InputError("checkpoint: truncated file");
    return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const TransformerLM& model) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error("checkpoint: cannot write " + path.string());
    const ModelConfig& c = model.config();
    os.write(kMagic, sizeof kMagic);
    put<std::int32_t>(os, c.num_layers);
    put<std::int32_t>(os, c.num_heads);
    put<std::int32_t>(os, c.hidden);
    put<std::int32_t>(os, c.vocab_size);
    put<std::int32_t>(os, c.max_seq_len);
    put<double>(os, c.dropout);
    put<std::uint64_t>(os, model.parameters().size());
    for (const auto& p : model.parameters()) {
        put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name().size()));
        os.write(p.name().data(), static_cast<std::streamsize>(p.name().size()));
        const nk::Tensor& t = p.value();
        put<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
        for (Index d : t.shape())
            put<std::int64_t>(os, d);
        os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!os)
        throw Error("checkpoint: write failed for " + path.string());
}

TransformerLM load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw InputError("checkpoint: cannot open " + path.string());
    char magic[sizeof kMagic];
    if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic))
        throw InputError("checkpoint: bad header in " + path.string());
    ModelConfig c;
    c.num_layers = get<std::int32_t>(is);
    c.num_heads = get<std::int32_t>(is);
    c.hidden = get<std::int32_t>(is);
    c.vocab_size = get<std::int32_t>(is);
    c.max_seq_len = get<std::int32_t>(is);
    c.dropout = get<double>(is);
    TransformerLM model(c, 0);
    const auto count = get<std::uint64_t>(is);
    if (count != model.parameters().size())
        throw InputError("checkpoint: parameter count mismatch");
    for (auto& p : model.parameters()) {
        const auto len = get<std::uint32_t>(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len) || name != p.name())
            throw InputError("checkpoint: expected parameter " + p.name());
        const auto rank = get<std::uint32_t>(is);
        nk::Shape shape(rank);
        for (auto& d : shape)
            d = get<std::int64_t>(is);
        if (shape != p.value().shape())
            throw InputError("checkpoint: shape mismatch for " + p.name());
        nk::Tensor& t = p.value();
        if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double))))
            throw InputError("checkpoint: truncated data for " + p.name());
    }
    return model;
}

} // namespace clgen::model
