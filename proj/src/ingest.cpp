#include "refpred/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace refpred {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file '" + path + "'");
    return in;
}

}  // namespace

SuccessMatrix load_success_csv(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("success csv '" + path + "': empty file");
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "llm_id")
        throw std::runtime_error("success csv '" + path +
                                 "': header must start with 'llm_id' and name instances");
    std::vector<InstanceId> instance_ids(header.begin() + 1, header.end());

    std::vector<LlmId> llm_ids;
    std::vector<std::uint8_t> values;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("success csv '" + path + "': row " + std::to_string(row) +
                                     " has " + std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        llm_ids.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            if (cells[c] == "0")
                values.push_back(0);
            else if (cells[c] == "1")
                values.push_back(1);
            else
                throw std::runtime_error("success csv '" + path + "': non-binary cell '" +
                                         cells[c] + "' at (row " + std::to_string(row) + ", col " +
                                         std::to_string(c) + ")");
        }
    }
    // The constructor reports duplicate ids on either axis.
    return SuccessMatrix(std::move(llm_ids), std::move(instance_ids), std::move(values));
}

void save_success_csv(const SuccessMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    out << "llm_id";
    for (const auto& id : matrix.instance_ids()) out << ',' << id;
    out << '\n';
    for (std::size_t j = 0; j < matrix.n_llms(); ++j) {
        out << matrix.llm_ids()[j];
        for (std::size_t i = 0; i < matrix.n_instances(); ++i)
            out << ',' << static_cast<int>(matrix.at(j, i));
        out << '\n';
    }
}

FeatureStore load_embeddings_jsonl(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::vector<InstanceId> ids;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    std::string line;
    std::size_t line_no = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("embeddings jsonl '" + path + "': line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("instance_id") || !j.contains("embedding") || !j.contains("dataset"))
            throw std::runtime_error("embeddings jsonl '" + path + "': line " +
                                     std::to_string(line_no) +
                                     ": need instance_id, embedding, dataset");
        std::vector<double> vec;
        for (const auto& v : j.at("embedding")) {
            if (!v.is_number())
                throw std::runtime_error("embeddings jsonl '" + path + "': line " +
                                         std::to_string(line_no) + ": non-numeric embedding entry");
            const double x = v.get<double>();
            if (!std::isfinite(x))
                throw std::runtime_error("embeddings jsonl '" + path + "': line " +
                                         std::to_string(line_no) + ": non-finite embedding entry");
            vec.push_back(x);
        }
        if (dim == 0 && !vec.empty()) dim = vec.size();
        if (vec.size() != dim)
            throw std::runtime_error("embeddings jsonl '" + path + "': line " +
                                     std::to_string(line_no) + ": dim " +
                                     std::to_string(vec.size()) + " != " + std::to_string(dim));
        ids.push_back(j.at("instance_id").get<std::string>());
        labels.push_back(j.at("dataset").get<std::string>());
        rows.push_back(std::move(vec));
    }
    return FeatureStore(std::move(ids), Matrix::from_rows(rows), std::move(labels));
}

void save_embeddings_jsonl(const FeatureStore& store, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    for (std::size_t i = 0; i < store.size(); ++i) {
        nlohmann::json j;
        j["instance_id"] = store.instance_ids()[i];
        j["embedding"] = store.row_vec(i);
        j["dataset"] = store.dataset_labels()[i];
        out << j.dump() << '\n';
    }
}

FeatureStore truncate_embeddings(const FeatureStore& store, std::size_t k) {
    if (k < 1 || k > store.dim())
        throw std::invalid_argument("truncate_embeddings: k must be in [1, " +
                                    std::to_string(store.dim()) + "], got " + std::to_string(k));
    Matrix m(store.size(), k);
    for (std::size_t i = 0; i < store.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) m(i, j) = store.vectors()(i, j);
    return FeatureStore(store.instance_ids(), std::move(m), store.dataset_labels());
}

std::vector<PromptRecord> load_prompts_jsonl(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    std::vector<PromptRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("prompts jsonl '" + path + "': line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
        out.push_back({j.at("instance_id").get<std::string>(),
                       j.value("dataset", std::string()),
                       j.at("prompt").get<std::string>()});
    }
    return out;
}

namespace {

// Unicode code points with the White_Space property (plus ASCII controls).
bool is_space_cp(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680:
        case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
        case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
        case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
        case 0x3000:
            return true;
        default:
            return false;
    }
}

// Minimal UTF-8 decode; invalid bytes pass through as single code points.
char32_t next_cp(const std::string& s, std::size_t& i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    std::size_t len = c >= 0xF0 ? 4 : c >= 0xE0 ? 3 : 2;
    if (i + len > s.size()) len = 1;
    char32_t cp = 0;
    switch (len) {
        case 2: cp = c & 0x1F; break;
        case 3: cp = c & 0x0F; break;
        case 4: cp = c & 0x07; break;
        default: ++i; return c;
    }
    for (std::size_t k = 1; k < len; ++k) {
        const unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
            ++i;
            return c;
        }
        cp = (cp << 6) | (cc & 0x3F);
    }
    i += len;
    return cp;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> raw;
    std::string cur;
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t cp = next_cp(text, i);
        if (is_space_cp(cp)) {
            if (!cur.empty()) {
                raw.push_back(cur);
                cur.clear();
            }
        } else {
            cur.append(text, start, i - start);
        }
    }
    if (!cur.empty()) raw.push_back(cur);

    std::vector<std::string> out;
    for (std::string& tok : raw) {
        std::size_t b = 0, e = tok.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(tok[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(tok[e - 1]))) --e;
        if (b >= e) continue;
        std::string t = tok.substr(b, e - b);
        for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(t));
    }
    return out;
}

FeatureStore one_gram_features(const std::vector<PromptRecord>& train_prompts,
                               const std::vector<PromptRecord>& all_prompts,
                               std::size_t vocab_cap) {
    std::map<std::string, std::size_t> corpus_counts;
    for (const auto& p : train_prompts)
        for (const auto& tok : tokenize(p.text)) corpus_counts[tok]++;
    if (corpus_counts.empty())
        throw std::invalid_argument("one_gram_features: empty training corpus");

    // Keep the vocab_cap most frequent tokens; ties go to the
    // lexicographically smaller token. Columns in the same order.
    std::vector<std::pair<std::string, std::size_t>> vocab(corpus_counts.begin(),
                                                           corpus_counts.end());
    std::sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (vocab.size() > vocab_cap) vocab.resize(vocab_cap);
    std::map<std::string, std::size_t> column_of;
    for (std::size_t c = 0; c < vocab.size(); ++c) column_of[vocab[c].first] = c;

    Matrix m(all_prompts.size(), vocab.size(), 0.0);
    std::vector<InstanceId> ids(all_prompts.size());
    std::vector<std::string> labels(all_prompts.size());
    for (std::size_t i = 0; i < all_prompts.size(); ++i) {
        ids[i] = all_prompts[i].instance_id;
        labels[i] = all_prompts[i].dataset;
        for (const auto& tok : tokenize(all_prompts[i].text)) {
            const auto it = column_of.find(tok);
            if (it == column_of.end()) continue;
            m(i, it->second) += 1.0;
        }
        for (std::size_t c = 0; c < vocab.size(); ++c)
            m(i, c) /= static_cast<double>(std::max<std::size_t>(1, vocab[c].second));
    }
    return FeatureStore(std::move(ids), std::move(m), std::move(labels));
}

}  // namespace refpred
