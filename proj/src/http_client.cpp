#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "refpred/ingest.hpp"

namespace refpred {

Matrix fetch_embeddings(const std::string& host, int port, const std::string& endpoint,
                        const std::vector<std::string>& texts, int timeout_seconds) {
    httplib::Client client(host, port);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);

    nlohmann::json body;
    body["texts"] = texts;
    const auto res = client.Post(endpoint, body.dump(), "application/json");
    if (!res)
        throw std::runtime_error("fetch_embeddings: no response from " + host + ":" +
                                 std::to_string(port));
    if (res->status != 200)
        throw std::runtime_error("fetch_embeddings: HTTP " + std::to_string(res->status));

    nlohmann::json parsed = nlohmann::json::parse(res->body);
    const auto& embs = parsed.at("embeddings");
    if (embs.size() != texts.size())
        throw std::runtime_error("fetch_embeddings: row count mismatch");
    std::vector<std::vector<double>> rows;
    for (const auto& row : embs) rows.push_back(row.get<std::vector<double>>());
    return Matrix::from_rows(rows);
}

}  // namespace refpred
