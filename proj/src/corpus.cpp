#include "ragfaith/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "ragfaith/error.hpp"
#include "ragfaith/util.hpp"

namespace ragfaith {

namespace fs = std::filesystem;

std::string SnippetRef::str() const {
    return doc_id + ":" + std::to_string(page_no) + ":" + std::to_string(snippet_no);
}

std::vector<TokenSpan> window_spans(std::size_t n_tokens, std::size_t window, std::size_t stride) {
    if (window < 1) {
        throw ValidationError("snippet window must be >= 1");
    }
    if (stride < 1 || stride > window) {
        throw ValidationError("snippet stride must satisfy 1 <= stride <= window");
    }
    std::vector<TokenSpan> spans;
    for (std::size_t start = 0; start < n_tokens; start += stride) {
        spans.push_back({start, std::min(window, n_tokens - start)});
    }
    return spans;
}

std::vector<Snippet> chunk_page(const Page& page, const Tokenizer& tokenizer, std::size_t window,
                                std::size_t stride) {
    const auto tokens = tokenizer.tokenize(page.text);
    const auto spans = window_spans(tokens.size(), window, stride);
    std::vector<Snippet> out;
    out.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        out.push_back({page.doc_id, page.page_no, i, spans[i],
                       std::string(token_span_text(page.text, tokens, spans[i].start,
                                                   spans[i].length))});
    }
    return out;
}

std::vector<std::string> split_pages(const std::string& text, const std::string& delimiter) {
    if (delimiter.empty()) {
        return {text};
    }
    std::vector<std::string> pages;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t hit = text.find(delimiter, pos);
        if (hit == std::string::npos) {
            pages.push_back(text.substr(pos));
            break;
        }
        pages.push_back(text.substr(pos, hit + delimiter.size() - pos));
        pos = hit + delimiter.size();
    }
    if (pages.empty()) {
        pages.emplace_back();
    }
    return pages;
}

KnowledgeBase KnowledgeBase::build(std::vector<Document> documents,
                                   std::vector<std::vector<std::string>> pages_per_document,
                                   const IngestionConfig& config,
                                   std::shared_ptr<const Tokenizer> tokenizer) {
    if (pages_per_document.size() != documents.size()) {
        throw IngestionError("pages_per_document must have one entry per document");
    }
    // Validates window/stride up front, even for an empty corpus.
    window_spans(0, config.window, config.effective_stride());

    KnowledgeBase kb;
    kb.config_ = config;
    kb.tokenizer_name_ = tokenizer->name();
    std::set<std::string> seen;
    for (std::size_t d = 0; d < documents.size(); ++d) {
        auto& doc = documents[d];
        if (!seen.insert(doc.id).second) {
            throw IngestionError("duplicate document id: " + doc.id);
        }
        auto& page_texts = pages_per_document[d];
        for (std::size_t p = 0; p < page_texts.size(); ++p) {
            Page page{doc.id, p, std::move(page_texts[p])};
            const std::size_t first = kb.snippets_.size();
            for (auto& s : chunk_page(page, *tokenizer, config.window, config.effective_stride())) {
                kb.snippets_.push_back(std::move(s));
            }
            kb.page_snippets_.emplace_back(first, kb.snippets_.size());
            kb.pages_.push_back(std::move(page));
        }
        kb.documents_.push_back(std::move(doc));
    }
    kb.index_lookups();
    return kb;
}

void KnowledgeBase::index_lookups() {
    doc_lookup_.clear();
    page_lookup_.clear();
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        doc_lookup_[documents_[i].id] = i;
    }
    for (std::size_t i = 0; i < pages_.size(); ++i) {
        page_lookup_[{pages_[i].doc_id, pages_[i].page_no}] = i;
    }
}

const Document* KnowledgeBase::find_document(const std::string& id) const {
    auto it = doc_lookup_.find(id);
    return it == doc_lookup_.end() ? nullptr : &documents_[it->second];
}

std::optional<std::size_t> KnowledgeBase::page_index(const std::string& doc_id,
                                                     std::size_t page_no) const {
    auto it = page_lookup_.find({doc_id, page_no});
    if (it == page_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::pair<std::size_t, std::size_t> KnowledgeBase::snippets_of_page(std::size_t page_idx) const {
    return page_snippets_.at(page_idx);
}

namespace {

json config_to_json(const IngestionConfig& c, const std::string& tokenizer) {
    return {{"window", c.window},
            {"stride", c.effective_stride()},
            {"page_delimiter", c.page_delimiter},
            {"tokenizer", tokenizer}};
}

std::string jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

}  // namespace

void KnowledgeBase::save(const fs::path& dir) const {
    fs::create_directories(dir);
    std::vector<json> docs;
    for (const auto& d : documents_) {
        docs.push_back({{"id", d.id},
                        {"title", d.title},
                        {"year", d.year ? json(*d.year) : json(nullptr)},
                        {"source", d.source},
                        {"text", d.text}});
    }
    std::vector<json> pages;
    for (const auto& p : pages_) {
        pages.push_back({{"doc_id", p.doc_id}, {"page_no", p.page_no}, {"text", p.text}});
    }
    std::vector<json> snippets;
    for (const auto& s : snippets_) {
        snippets.push_back({{"doc_id", s.doc_id},
                            {"page_no", s.page_no},
                            {"snippet_no", s.snippet_no},
                            {"start", s.span.start},
                            {"length", s.span.length},
                            {"text", s.text}});
    }
    json meta = {{"format_version", kFormatVersion},
                 {"config", config_to_json(config_, tokenizer_name_)},
                 {"counts",
                  {{"documents", documents_.size()},
                   {"pages", pages_.size()},
                   {"snippets", snippets_.size()}}}};
    write_file_atomic(dir / "documents.jsonl", jsonl(docs));
    write_file_atomic(dir / "pages.jsonl", jsonl(pages));
    write_file_atomic(dir / "snippets.jsonl", jsonl(snippets));
    write_file_atomic(dir / "kb.json", meta.dump(2) + "\n");
}

KnowledgeBase KnowledgeBase::load(const fs::path& dir) {
    json meta;
    try {
        meta = json::parse(read_file(dir / "kb.json"));
    } catch (const json::exception& e) {
        throw ValidationError("knowledge base metadata unreadable: " + std::string(e.what()));
    }
    if (meta.value("format_version", 0) != kFormatVersion) {
        throw ValidationError("unsupported knowledge base format_version in " + dir.string());
    }
    KnowledgeBase kb;
    try {
        const auto& cfg = meta.at("config");
        kb.config_.window = cfg.at("window").get<std::size_t>();
        kb.config_.stride = cfg.at("stride").get<std::size_t>();
        kb.config_.page_delimiter = cfg.at("page_delimiter").get<std::string>();
        kb.tokenizer_name_ = cfg.at("tokenizer").get<std::string>();

        for (const auto& line : read_jsonl(dir / "documents.jsonl")) {
            const auto& v = line.value;
            Document d;
            d.id = v.at("id").get<std::string>();
            d.title = v.at("title").get<std::string>();
            if (!v.at("year").is_null()) d.year = v.at("year").get<int>();
            d.source = v.at("source").get<std::string>();
            d.text = v.at("text").get<std::string>();
            kb.documents_.push_back(std::move(d));
        }
        for (const auto& line : read_jsonl(dir / "pages.jsonl")) {
            const auto& v = line.value;
            kb.pages_.push_back({v.at("doc_id").get<std::string>(),
                                 v.at("page_no").get<std::size_t>(),
                                 v.at("text").get<std::string>()});
        }
        for (const auto& line : read_jsonl(dir / "snippets.jsonl")) {
            const auto& v = line.value;
            kb.snippets_.push_back({v.at("doc_id").get<std::string>(),
                                    v.at("page_no").get<std::size_t>(),
                                    v.at("snippet_no").get<std::size_t>(),
                                    {v.at("start").get<std::size_t>(),
                                     v.at("length").get<std::size_t>()},
                                    v.at("text").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw ValidationError("knowledge base in " + dir.string() + " is malformed: " + e.what());
    }
    const auto& counts = meta.at("counts");
    if (counts.at("documents").get<std::size_t>() != kb.documents_.size() ||
        counts.at("pages").get<std::size_t>() != kb.pages_.size() ||
        counts.at("snippets").get<std::size_t>() != kb.snippets_.size()) {
        throw ValidationError("knowledge base counts do not match content in " + dir.string());
    }
    kb.index_lookups();
    // Snippets are stored grouped by page in page order.
    std::size_t s = 0;
    for (const auto& page : kb.pages_) {
        const std::size_t first = s;
        while (s < kb.snippets_.size() && kb.snippets_[s].doc_id == page.doc_id &&
               kb.snippets_[s].page_no == page.page_no) {
            ++s;
        }
        kb.page_snippets_.emplace_back(first, s);
    }
    if (s != kb.snippets_.size()) {
        throw ValidationError("snippets out of page order in " + dir.string());
    }
    return kb;
}

std::string KnowledgeBase::fingerprint() const {
    std::string acc = config_to_json(config_, tokenizer_name_).dump();
    for (const auto& p : pages_) {
        acc += sha256_hex(p.doc_id + '\x1f' + std::to_string(p.page_no) + '\x1f' + p.text);
    }
    for (const auto& d : documents_) {
        acc += sha256_hex(d.id + '\x1f' + d.title + '\x1f' +
                          (d.year ? std::to_string(*d.year) : "") + '\x1f' + d.source);
    }
    return sha256_hex(acc);
}

namespace {

std::optional<int> parse_year(const json& v) {
    if (v.is_null()) return std::nullopt;
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_string()) {
        const std::string s = trim(v.get<std::string>());
        if (s.empty()) return std::nullopt;
        std::size_t used = 0;
        const int y = std::stoi(s, &used);
        if (used != s.size()) throw ValidationError("year is not an integer: " + s);
        return y;
    }
    throw ValidationError("year must be an integer");
}

struct ParsedRecord {
    Document doc;
    std::vector<std::string> pages;
};

ParsedRecord parse_manifest_record(const json& v, const IngestionConfig& config) {
    if (!v.is_object()) throw ValidationError("record is not a JSON object");
    if (!v.contains("id") || !v["id"].is_string() || v["id"].get<std::string>().empty()) {
        throw ValidationError("missing id");
    }
    ParsedRecord r;
    r.doc.id = v["id"].get<std::string>();
    if (!v.contains("title") || !v["title"].is_string()) {
        throw ValidationError("document " + r.doc.id + ": missing title");
    }
    r.doc.title = v["title"].get<std::string>();
    if (v.contains("year")) r.doc.year = parse_year(v["year"]);
    if (v.contains("source") && v["source"].is_string()) r.doc.source = v["source"];
    if (v.contains("pages")) {
        if (!v["pages"].is_array()) {
            throw ValidationError("document " + r.doc.id + ": pages must be an array");
        }
        for (const auto& p : v["pages"]) {
            if (!p.is_string()) {
                throw ValidationError("document " + r.doc.id + ": pages must be strings");
            }
            r.pages.push_back(p.get<std::string>());
            r.doc.text += r.pages.back();
        }
    } else if (v.contains("text") && v["text"].is_string()) {
        r.doc.text = v["text"].get<std::string>();
        r.pages = split_pages(r.doc.text, config.page_delimiter);
    } else {
        throw ValidationError("document " + r.doc.id + ": missing text");
    }
    if (trim(r.doc.text).empty()) {
        throw ValidationError("document " + r.doc.id + ": empty text");
    }
    return r;
}

}  // namespace

IngestionResult ingest_documents(const fs::path& path, const IngestionConfig& config,
                                 std::shared_ptr<const Tokenizer> tokenizer) {
    if (!fs::exists(path)) {
        throw IngestionError("corpus path does not exist: " + path.string());
    }
    IngestionResult result;
    std::vector<Document> docs;
    std::vector<std::vector<std::string>> pages;
    std::set<std::string> seen;

    auto accept = [&](ParsedRecord rec) {
        if (!seen.insert(rec.doc.id).second) {
            throw IngestionError("duplicate document id: " + rec.doc.id);
        }
        docs.push_back(std::move(rec.doc));
        pages.push_back(std::move(rec.pages));
    };

    fs::path manifest = path;
    if (fs::is_directory(path)) {
        manifest = path / "manifest.jsonl";
        if (!fs::exists(manifest)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::recursive_directory_iterator(path)) {
                const auto ext = entry.path().extension();
                if (entry.is_regular_file() && (ext == ".txt" || ext == ".md")) {
                    files.push_back(entry.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                ++result.records;
                ParsedRecord rec;
                rec.doc.id = fs::relative(f, path).replace_extension().generic_string();
                rec.doc.title = f.stem().string();
                rec.doc.text = read_file(f);
                if (trim(rec.doc.text).empty()) {
                    result.errors.push_back(f.string() + ": empty text");
                    continue;
                }
                rec.pages = split_pages(rec.doc.text, config.page_delimiter);
                accept(std::move(rec));
            }
            result.kb = KnowledgeBase::build(std::move(docs), std::move(pages), config, tokenizer);
            return result;
        }
    }

    const auto lines = read_jsonl_lenient(manifest, [&](std::size_t line_no, const std::string& e) {
        ++result.records;
        result.errors.push_back("line " + std::to_string(line_no) + ": " + e);
    });
    for (const auto& line : lines) {
        ++result.records;
        ParsedRecord rec;
        try {
            rec = parse_manifest_record(line.value, config);
        } catch (const ValidationError& e) {
            result.errors.push_back("line " + std::to_string(line.line_no) + ": " + e.what());
            continue;
        } catch (const std::exception& e) {
            result.errors.push_back("line " + std::to_string(line.line_no) + ": " + e.what());
            continue;
        }
        accept(std::move(rec));
    }
    result.kb = KnowledgeBase::build(std::move(docs), std::move(pages), config, tokenizer);
    return result;
}

}  // namespace ragfaith
