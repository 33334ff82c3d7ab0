#pragma once
// Node similarity between query-graph entities and world entities.
//
// The default provider is deterministic lexical similarity over a canonical
// form (case-folded, -/_ folded to spaces, tokens sorted):
//
//     0.5 * token-set Jaccard + 0.4 * character-trigram cosine
//
// scaled into [0,1] so that 1.0 holds exactly when the normalized token
// multisets are equal. The scorer blends the provider value with a type
// compatibility indicator worth 0.1, and takes the better of name-vs-name
// and name+attributes-vs-name+attributes so attributes break ties without
// diluting exact name matches.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kgplan/pddl.hpp"
#include "kgplan/world_graph.hpp"

namespace kgplan {

struct QueryEntity {
    std::string name;
    std::map<std::string, std::string> attributes;
    std::string type_hint;  // optional

    auto operator<=>(const QueryEntity&) const = default;
};

class ProviderError : public std::runtime_error {
public:
    ProviderError(const std::string& msg, bool retryable)
        : std::runtime_error(msg), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

// Text-pair similarity in [0,1]. Implementations must be symmetric.
class TextSimilarity {
public:
    virtual ~TextSimilarity() = default;
    virtual double score(const std::string& a, const std::string& b) const = 0;
    virtual std::string id() const = 0;
};

class LexicalSimilarity final : public TextSimilarity {
public:
    static std::vector<std::string> tokens(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char raw : s) {
            char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
            if (std::isalnum(static_cast<unsigned char>(c))) {
                cur.push_back(c);
            } else if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        }
        if (!cur.empty()) out.push_back(cur);
        std::sort(out.begin(), out.end());
        return out;
    }

    static std::string canonical(const std::string& s) { return join(tokens(s), " "); }

    double score(const std::string& a, const std::string& b) const override {
        double raw = 0.5 * jaccard(a, b) + 0.4 * trigram_cosine(a, b);
        return raw / 0.9;
    }

    std::string id() const override { return "lexical"; }

    static double jaccard(const std::string& a, const std::string& b) {
        auto ta = tokens(a);
        auto tb = tokens(b);
        ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
        tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
        if (ta.empty() && tb.empty()) return 1.0;
        if (ta.empty() || tb.empty()) return 0.0;
        std::vector<std::string> both;
        std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                              std::back_inserter(both));
        return static_cast<double>(both.size()) /
               static_cast<double>(ta.size() + tb.size() - both.size());
    }

    static double trigram_cosine(const std::string& a, const std::string& b) {
        auto ga = trigrams(a);
        auto gb = trigrams(b);
        if (ga.empty() && gb.empty()) return 1.0;
        if (ga.empty() || gb.empty()) return 0.0;
        double dot = 0;
        for (const auto& [g, n] : ga) {
            auto it = gb.find(g);
            if (it != gb.end()) dot += static_cast<double>(n) * it->second;
        }
        auto sq = [](const std::map<std::string, int>& m) {
            double s = 0;
            for (const auto& [g, n] : m) s += static_cast<double>(n) * n;
            return s;
        };
        return dot / std::sqrt(sq(ga) * sq(gb));
    }

    static std::map<std::string, int> trigrams(const std::string& s) {
        std::string c = canonical(s);
        std::map<std::string, int> out;
        if (c.empty()) return out;
        if (c.size() < 3) {
            out[c] = 1;
            return out;
        }
        for (size_t i = 0; i + 3 <= c.size(); ++i) out[c.substr(i, 3)]++;
        return out;
    }
};

struct SimilarityMatrix {
    std::vector<QueryEntity> query;     // rows
    std::vector<std::string> entities;  // columns (world entity names)
    std::vector<std::vector<double>> values;

    double at(size_t row, size_t col) const { return values[row][col]; }

    double row_max(size_t row) const {
        double best = 0.0;
        for (double v : values[row]) best = std::max(best, v);
        return best;
    }
};

class SimilarityScorer {
public:
    explicit SimilarityScorer(std::shared_ptr<const TextSimilarity> provider = nullptr)
        : provider_(provider ? std::move(provider)
                             : std::make_shared<const LexicalSimilarity>()) {}

    const TextSimilarity& provider() const { return *provider_; }

    double score(const QueryEntity& q, const Entity& e, const Domain* domain = nullptr) const {
        double text = provider_->score(q.name, e.name);
        std::string qfull = with_attributes(q.name, q.attributes);
        std::string efull = with_attributes(e.name, e.attributes);
        if (qfull != q.name || efull != e.name)
            text = std::max(text, provider_->score(qfull, efull));
        double s = 0.9 * text + 0.1 * (type_compatible(q.type_hint, e.type, domain) ? 1.0 : 0.0);
        return std::clamp(s, 0.0, 1.0);
    }

    SimilarityMatrix matrix(const std::vector<QueryEntity>& query, const WorldGraph& g) const {
        SimilarityMatrix m;
        m.query = query;
        for (const auto& [name, e] : g.entities()) m.entities.push_back(name);
        const Domain* domain = g.domain().get();
        m.values.resize(query.size());
        for (size_t i = 0; i < query.size(); ++i) {
            m.values[i].reserve(m.entities.size());
            for (const auto& name : m.entities)
                m.values[i].push_back(score(query[i], *g.find_entity(name), domain));
        }
        return m;
    }

private:
    static std::string with_attributes(const std::string& name,
                                       const std::map<std::string, std::string>& attrs) {
        if (attrs.empty()) return name;
        std::string s = name;
        for (const auto& [k, v] : attrs) {
            s += " ";
            s += v;
        }
        return s;
    }

    static bool type_compatible(const std::string& hint, const std::string& type,
                                const Domain* domain) {
        if (hint.empty()) return true;
        std::string h = normalize_name(hint);
        if (h == type) return true;
        if (!domain) return false;
        return domain->is_subtype(type, h) || domain->is_subtype(h, type);
    }

    std::shared_ptr<const TextSimilarity> provider_;
};

}  // namespace kgplan
