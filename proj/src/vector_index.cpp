#include "ragfaith/vector_index.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "ragfaith/error.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

static_assert(std::endian::native == std::endian::little,
              "index payload is written as little-endian float32");

namespace {
constexpr char kMagic[4] = {'R', 'F', 'V', 'I'};

/// Cuts at most `limit` bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(const std::string& s, std::size_t limit) {
    if (limit == 0 || s.size() <= limit) {
        return s;
    }
    std::size_t cut = limit;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) {
        --cut;
    }
    return s.substr(0, cut);
}
}  // namespace

std::string to_string(Granularity g) { return g == Granularity::page ? "page" : "snippet"; }

Granularity granularity_from_string(const std::string& s) {
    if (s == "page") return Granularity::page;
    if (s == "snippet") return Granularity::snippet;
    throw ValidationError("unknown granularity: " + s);
}

VectorIndex::VectorIndex(Granularity granularity, std::string model_id, std::size_t dim,
                         std::string kb_fingerprint, std::vector<std::string> ids,
                         std::vector<float> flat_vectors)
    : granularity_(granularity),
      model_id_(std::move(model_id)),
      dim_(dim),
      kb_fingerprint_(std::move(kb_fingerprint)),
      ids_(std::move(ids)),
      vectors_(std::move(flat_vectors)) {
    if (vectors_.size() != ids_.size() * dim_) {
        throw ValidationError("index payload size does not match ids x dim");
    }
}

std::span<const float> VectorIndex::vector(std::size_t i) const {
    return std::span<const float>(vectors_).subspan(i * dim_, dim_);
}

std::string VectorIndex::serialize() const {
    const json header = {{"format_version", kFormatVersion}, {"granularity", to_string(granularity_)},
                         {"model_id", model_id_},           {"dim", dim_},
                         {"count", ids_.size()},            {"kb_fingerprint", kb_fingerprint_},
                         {"ids", ids_}};
    const std::string h = header.dump();
    std::string out(kMagic, 4);
    const std::uint32_t version = kFormatVersion;
    const std::uint64_t hlen = h.size();
    out.append(reinterpret_cast<const char*>(&version), sizeof version);
    out.append(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out += h;
    out.append(reinterpret_cast<const char*>(vectors_.data()), vectors_.size() * sizeof(float));
    return out;
}

VectorIndex VectorIndex::deserialize(const std::string& bytes) {
    constexpr std::size_t kPrefix = 4 + sizeof(std::uint32_t) + sizeof(std::uint64_t);
    if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ValidationError("not a vector index file");
    }
    std::uint32_t version = 0;
    std::uint64_t hlen = 0;
    std::memcpy(&version, bytes.data() + 4, sizeof version);
    std::memcpy(&hlen, bytes.data() + 8, sizeof hlen);
    if (version != kFormatVersion) {
        throw ValidationError("unsupported vector index version " + std::to_string(version));
    }
    if (bytes.size() < kPrefix + hlen) {
        throw ValidationError("truncated vector index header");
    }
    json header;
    try {
        header = json::parse(bytes.substr(kPrefix, hlen));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("corrupt vector index header: ") + e.what());
    }
    const auto dim = header.at("dim").get<std::size_t>();
    auto ids = header.at("ids").get<std::vector<std::string>>();
    const std::size_t payload = bytes.size() - kPrefix - hlen;
    if (payload != ids.size() * dim * sizeof(float)) {
        throw ValidationError("vector index payload has wrong size");
    }
    std::vector<float> vectors(ids.size() * dim);
    std::memcpy(vectors.data(), bytes.data() + kPrefix + hlen, payload);
    return VectorIndex(granularity_from_string(header.at("granularity").get<std::string>()),
                       header.at("model_id").get<std::string>(), dim,
                       header.at("kb_fingerprint").get<std::string>(), std::move(ids),
                       std::move(vectors));
}

void VectorIndex::save(const std::filesystem::path& path) const {
    write_file_atomic(path, serialize());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    return deserialize(read_file(path));
}

std::vector<std::string> index_item_ids(const KnowledgeBase& kb, Granularity granularity) {
    std::vector<std::string> ids;
    if (granularity == Granularity::page) {
        for (const auto& p : kb.pages()) {
            ids.push_back(p.doc_id + ":" + std::to_string(p.page_no));
        }
    } else {
        for (const auto& s : kb.snippets()) {
            ids.push_back(s.ref().str());
        }
    }
    return ids;
}

VectorIndex build_index(const KnowledgeBase& kb, EmbeddingProvider& provider,
                        Granularity granularity, const IndexBuildOptions& options) {
    if (kb.documents().empty()) {
        throw ValidationError("cannot build an index over an empty knowledge base");
    }
    std::vector<std::string> texts;
    if (granularity == Granularity::page) {
        for (const auto& p : kb.pages()) {
            texts.push_back(truncate_utf8(p.text, provider.max_input_chars()));
        }
    } else {
        for (const auto& s : kb.snippets()) {
            texts.push_back(s.text);
        }
    }

    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    const std::size_t n_batches = (texts.size() + batch - 1) / batch;
    std::vector<std::vector<Embedding>> results(n_batches);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> embedded{0};
    std::atomic<bool> failed{false};
    std::mutex err_mu;
    std::string first_error;

    auto worker = [&] {
        for (;;) {
            if (failed.load()) return;
            const std::size_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            const std::size_t lo = b * batch;
            const std::size_t hi = std::min(texts.size(), lo + batch);
            try {
                results[b] = embed_with_retry(
                    provider, std::span<const std::string>(texts).subspan(lo, hi - lo),
                    options.retry);
                embedded += hi - lo;
            } catch (const std::exception& e) {
                std::lock_guard lock(err_mu);
                if (!failed.exchange(true)) first_error = e.what();
                return;
            }
        }
    };
    const std::size_t n_threads = std::clamp<std::size_t>(options.concurrency, 1, n_batches);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    if (failed.load()) {
        throw EmbeddingError("embedding failed after " + std::to_string(embedded.load()) + " of " +
                                 std::to_string(texts.size()) + " items: " + first_error,
                             embedded.load());
    }

    std::size_t dim = 0;
    std::vector<float> flat;
    for (auto& vs : results) {
        for (auto& v : vs) {
            if (dim == 0) {
                dim = v.size();
                flat.reserve(dim * texts.size());
            }
            if (v.size() != dim || dim == 0) {
                throw ValidationError("embedding provider returned inconsistent dimensions");
            }
            normalize_in_place(v);
            flat.insert(flat.end(), v.begin(), v.end());
        }
    }
    return VectorIndex(granularity, provider.model_id(), dim, kb.fingerprint(),
                       index_item_ids(kb, granularity), std::move(flat));
}

bool index_is_current(const VectorIndex& index, const KnowledgeBase& kb,
                      const std::string& model_id, Granularity granularity) {
    return index.granularity() == granularity && index.model_id() == model_id &&
           index.kb_fingerprint() == kb.fingerprint() &&
           index.ids() == index_item_ids(kb, granularity);
}

}  // namespace ragfaith
