#pragma once
// Single choke point for language-model interaction: prompt templates,
// completion calls, transcript/token accounting, structured-output parsing,
// and the deterministic mock backends used by tests and the simulator.
//
// Token counts for mock backends use a fixed approximation (ceil(bytes/4))
// so paired runs are comparable; HTTP backends report real usage when the
// server provides it.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/util.hpp"
#include "kgplan/world_graph.hpp"

namespace kgplan {

inline int approx_tokens(std::string_view text) {
    if (text.empty()) return 0;
    return static_cast<int>((text.size() + 3) / 4);
}

class LmError : public std::runtime_error {
public:
    LmError(const std::string& msg, bool retryable) : std::runtime_error(msg), retryable_(retryable) {}
    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

class BudgetExceeded : public std::runtime_error {
public:
    explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

// --- templates -------------------------------------------------------------

// Templates are plain text with {{section}} placeholders. Every placeholder
// must be filled exactly once; section order is fixed by the template text.
class TemplateSet {
public:
    static TemplateSet builtin() {
        TemplateSet t;
        t.texts_["query_graph"] =
            "Extract the entities and relations mentioned in the text below as a query graph.\n"
            "Reply with an ENTITIES: list (one per line, numbered, optionally with '| type: T' "
            "and '| key=value' annotations) followed by a RELATIONS: list of lines "
            "'<subject index> <label> <object index>'.\n"
            "Text: {{text}}\n";
        t.texts_["select_entities"] =
            "The environment contains the following entities:\n{{entities}}\n"
            "List the entities relevant to the request below.\n"
            "Reply with a single line 'RELEVANT:' followed by comma-separated entity names.\n"
            "Request: {{text}}\n";
        t.texts_["update"] =
            "You maintain a knowledge graph of the environment as "
            "(subject, relationship, object) and (subject, property, true) triplets.\n"
            "Entities: {{entities}}\n"
            "Current relations:\n{{context}}\n"
            "State change: {{update}}\n"
            "Determine which of the relations should be removed and what new relations should "
            "be added to reflect the state change. Do not invent new entities.\n"
            "Reply with two lines:\nREMOVE: (s, p, o), ...\nADD: (s, p, o), ...\n"
            "Use the word 'empty' for an empty list.\n{{errors}}";
        t.texts_["goal"] =
            "A planning domain defines these types, predicates and actions:\n{{domain}}\n"
            "Objects: {{entities}}\n"
            "Known state:\n{{context}}\n"
            "Task: {{task}}\n"
            "Provide the goal block for a problem PDDL file that accomplishes the task.\n"
            "Reply with a single s-expression of the form (:goal ...).\n";
        return t;
    }

    // Replaces each template whose id has a <id>.txt file in `dir`.
    void load_overrides(const std::filesystem::path& dir) {
        for (auto& [id, text] : texts_) {
            auto path = dir / (id + ".txt");
            std::ifstream in(path);
            if (!in) continue;
            std::ostringstream os;
            os << in.rdbuf();
            text = os.str();
        }
    }

    const std::string& text(const std::string& id) const {
        auto it = texts_.find(id);
        if (it == texts_.end()) throw LmError("unknown template '" + id + "'", false);
        return it->second;
    }

    std::string render(const std::string& id,
                       const std::vector<std::pair<std::string, std::string>>& sections) const {
        std::string out = text(id);
        for (const auto& [name, value] : sections) {
            std::string placeholder = "{{" + name + "}}";
            size_t pos = out.find(placeholder);
            if (pos == std::string::npos)
                throw LmError("template '" + id + "' has no section '" + name + "'", false);
            out.replace(pos, placeholder.size(), value);
            if (out.find(placeholder, pos) != std::string::npos)
                throw LmError("template '" + id + "' uses section '" + name + "' twice", false);
        }
        size_t pos = out.find("{{");
        if (pos != std::string::npos) {
            size_t end = out.find("}}", pos);
            throw LmError("section '" + out.substr(pos + 2, end - pos - 2) + "' of template '" +
                              id + "' was not filled",
                          false);
        }
        return out;
    }

private:
    std::map<std::string, std::string> texts_;
};

struct PromptBundle {
    std::string template_id;
    std::vector<std::pair<std::string, std::string>> sections;
    std::string rendered;
    int attempt = 1;

    const std::string* section(const std::string& name) const {
        for (const auto& [k, v] : sections)
            if (k == name) return &v;
        return nullptr;
    }
};

// --- transcript --------------------------------------------------------------

struct TranscriptEntry {
    std::string template_id;
    std::string prompt;
    std::string completion;
    int input_tokens = 0;
    int output_tokens = 0;
};

class LmTranscript {
public:
    void append(TranscriptEntry e) {
        total_input_ += e.input_tokens;
        total_output_ += e.output_tokens;
        entries_.push_back(std::move(e));
    }

    const std::vector<TranscriptEntry>& entries() const { return entries_; }
    long total_input_tokens() const { return total_input_; }
    long total_output_tokens() const { return total_output_; }
    long total_tokens() const { return total_input_ + total_output_; }
    size_t size() const { return entries_.size(); }

    void dump_jsonl(std::ostream& os) const {
        for (const auto& e : entries_) {
            nlohmann::json j = {{"template", e.template_id},
                                {"prompt", e.prompt},
                                {"completion", e.completion},
                                {"input_tokens", e.input_tokens},
                                {"output_tokens", e.output_tokens}};
            os << j.dump() << "\n";
        }
    }

    static std::vector<TranscriptEntry> load_jsonl(std::istream& is) {
        std::vector<TranscriptEntry> out;
        std::string line;
        while (std::getline(is, line)) {
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            TranscriptEntry e;
            e.template_id = j.value("template", "");
            e.prompt = j.value("prompt", "");
            e.completion = j.value("completion", "");
            e.input_tokens = j.value("input_tokens", 0);
            e.output_tokens = j.value("output_tokens", 0);
            out.push_back(std::move(e));
        }
        return out;
    }

private:
    std::vector<TranscriptEntry> entries_;
    long total_input_ = 0;
    long total_output_ = 0;
};

// --- backends ---------------------------------------------------------------

struct LmResult {
    std::string text;
    int input_tokens = -1;  // -1: backend has no usage info, gateway approximates
    int output_tokens = -1;
};

class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual LmResult complete(const PromptBundle& prompt) = 0;
    virtual std::string id() const = 0;
};

class LmGateway {
public:
    explicit LmGateway(std::shared_ptr<LmBackend> backend, TemplateSet templates = TemplateSet::builtin())
        : backend_(std::move(backend)), templates_(std::move(templates)) {}

    const TemplateSet& templates() const { return templates_; }
    LmTranscript& transcript() { return transcript_; }
    const LmTranscript& transcript() const { return transcript_; }
    std::string backend_id() const { return backend_->id(); }

    void set_token_ceiling(long ceiling) { token_ceiling_ = ceiling; }

    PromptBundle make_prompt(const std::string& template_id,
                             std::vector<std::pair<std::string, std::string>> sections,
                             int attempt = 1) const {
        PromptBundle b;
        b.template_id = template_id;
        b.sections = std::move(sections);
        b.rendered = templates_.render(template_id, b.sections);
        b.attempt = attempt;
        return b;
    }

    std::string complete(const PromptBundle& prompt) {
        if (token_ceiling_ > 0 && transcript_.total_tokens() >= token_ceiling_)
            throw BudgetExceeded("token ceiling of " + std::to_string(token_ceiling_) +
                                 " reached after " + std::to_string(transcript_.size()) +
                                 " calls");
        LmResult r = backend_->complete(prompt);
        TranscriptEntry e;
        e.template_id = prompt.template_id;
        e.prompt = prompt.rendered;
        e.completion = r.text;
        e.input_tokens = r.input_tokens >= 0 ? r.input_tokens : approx_tokens(prompt.rendered);
        e.output_tokens = r.output_tokens >= 0 ? r.output_tokens : approx_tokens(r.text);
        transcript_.append(std::move(e));
        return r.text;
    }

private:
    std::shared_ptr<LmBackend> backend_;
    TemplateSet templates_;
    LmTranscript transcript_;
    long token_ceiling_ = 0;
};

// --- structured output parsing ----------------------------------------------

class OutputParseError : public std::runtime_error {
public:
    OutputParseError(const std::string& msg, std::string span)
        : std::runtime_error(msg + (span.empty() ? "" : " near '" + span + "'")),
          span_(std::move(span)) {}
    const std::string& span() const { return span_; }

private:
    std::string span_;
};

// One triplet as emitted by the model, before any verification. The object
// slot holds "true" for property form.
struct RawTriplet {
    std::string subject;
    std::string predicate;
    std::string object;

    bool property_form() const { return object == "true" || object == "false"; }

    Triplet to_triplet() const {
        if (property_form()) return Triplet::prop(subject, predicate);
        return Triplet::rel(subject, predicate, object);
    }

    std::string str() const { return "(" + subject + ", " + predicate + ", " + object + ")"; }
    auto operator<=>(const RawTriplet&) const = default;
};

struct ParsedUpdate {
    std::vector<RawTriplet> removals;
    std::vector<RawTriplet> additions;

    std::string render() const {
        auto list = [](const std::vector<RawTriplet>& v) {
            if (v.empty()) return std::string("empty");
            std::vector<std::string> parts;
            for (const auto& t : v) parts.push_back(t.str());
            return join(parts, ", ");
        };
        return "REMOVE: " + list(removals) + "\nADD: " + list(additions);
    }
};

namespace detail {

// Comma-separated parenthesized triplets, or the word 'empty'. Whitespace
// (including newlines) is insignificant.
inline std::vector<RawTriplet> parse_triplet_list(const std::string& text) {
    std::vector<RawTriplet> out;
    std::string body = trim(text);
    if (body.empty() || lower(body) == "empty" || lower(body) == "none") return out;
    size_t pos = 0;
    while (pos < body.size()) {
        while (pos < body.size() &&
               (std::isspace(static_cast<unsigned char>(body[pos])) || body[pos] == ','))
            ++pos;
        if (pos >= body.size()) break;
        if (body[pos] != '(')
            throw OutputParseError("expected '(' to open a triplet", body.substr(pos, 24));
        size_t close = body.find(')', pos);
        if (close == std::string::npos)
            throw OutputParseError("triplet missing closing parenthesis", body.substr(pos, 24));
        std::string inner = body.substr(pos + 1, close - pos - 1);
        auto parts = split(inner, ',');
        if (parts.size() != 3)
            throw OutputParseError("triplet must have exactly three components",
                                   body.substr(pos, close - pos + 1));
        RawTriplet t;
        t.subject = normalize_name(trim(parts[0]));
        t.predicate = normalize_name(trim(parts[1]));
        t.object = normalize_name(trim(parts[2]));
        if (t.subject.empty() || t.predicate.empty() || t.object.empty())
            throw OutputParseError("triplet has an empty component",
                                   body.substr(pos, close - pos + 1));
        out.push_back(std::move(t));
        pos = close + 1;
    }
    return out;
}

}  // namespace detail

// Grammar: a REMOVE: section followed by an ADD: section; each lists
// comma-separated parenthesized triplets or 'empty'. Anything else fails.
inline ParsedUpdate parse_update(const std::string& completion) {
    std::string text = trim(completion);
    auto find_marker = [&](const std::string& marker) -> size_t {
        std::string lowered = lower(text);
        return lowered.find(marker);
    };
    size_t rem = find_marker("remove:");
    size_t add = find_marker("add:");
    if (rem == std::string::npos)
        throw OutputParseError("missing REMOVE: marker", text.substr(0, 24));
    if (add == std::string::npos) throw OutputParseError("missing ADD: marker", text.substr(0, 24));
    if (add < rem) throw OutputParseError("ADD: section precedes REMOVE:", "");
    if (trim(text.substr(0, rem)) != "")
        throw OutputParseError("unexpected text before REMOVE:", text.substr(0, rem));

    ParsedUpdate u;
    u.removals = detail::parse_triplet_list(text.substr(rem + 7, add - rem - 7));
    u.additions = detail::parse_triplet_list(text.substr(add + 4));
    return u;
}

// Extracts the first balanced `(:goal ...)` s-expression; prose around the
// block is tolerated.
inline std::string extract_goal_block(const std::string& completion) {
    std::string lowered = lower(completion);
    size_t start = lowered.find("(:goal");
    if (start == std::string::npos)
        throw OutputParseError("no (:goal ...) block found", completion.substr(0, 32));
    int depth = 0;
    for (size_t i = start; i < completion.size(); ++i) {
        if (completion[i] == '(') ++depth;
        if (completion[i] == ')') {
            --depth;
            if (depth == 0) return completion.substr(start, i - start + 1);
        }
    }
    throw OutputParseError("unbalanced (:goal ...) block", completion.substr(start, 32));
}

// --- mock backends ------------------------------------------------------------

// Ground-truth answers for one upcoming event or task. Whoever produced the
// NL text (the simulator, a demo playbook) knows the right answers; the
// oracle backend replays them, modeling a model that is always right.
struct OracleAnswers {
    std::string query_graph;  // completion for the query_graph template
    std::string selection;    // completion for select_entities
    std::string update;       // completion for update
    std::string goal;         // completion for goal
};

class OracleBackend : public LmBackend {
public:
    void stage(OracleAnswers answers) { staged_ = std::move(answers); }

    // Playbook entries answer by substring match on the request text, which
    // lets the CLI run oracle mode over scripted scenarios.
    void add_playbook_entry(std::string match, OracleAnswers answers) {
        playbook_.emplace_back(std::move(match), std::move(answers));
    }

    LmResult complete(const PromptBundle& prompt) override {
        const OracleAnswers* a = &staged_;
        std::string request = request_text(prompt);
        for (const auto& [match, answers] : playbook_) {
            if (request.find(match) != std::string::npos) {
                a = &answers;
                break;
            }
        }
        std::string text = pick_field(*a, prompt.template_id);
        if (text.empty())
            throw LmError("oracle backend has no staged answer for template '" +
                              prompt.template_id + "'",
                          false);
        return {text, -1, -1};
    }

    std::string id() const override { return "oracle"; }

private:
    static std::string request_text(const PromptBundle& prompt) {
        for (const char* key : {"update", "task", "text"})
            if (const std::string* s = prompt.section(key)) return *s;
        return prompt.rendered;
    }

    static std::string pick_field(const OracleAnswers& a, const std::string& template_id) {
        if (template_id == "query_graph") return a.query_graph;
        if (template_id == "select_entities") return a.selection;
        if (template_id == "update") return a.update;
        if (template_id == "goal") return a.goal;
        return "";
    }

    OracleAnswers staged_;
    std::vector<std::pair<std::string, OracleAnswers>> playbook_;
};

// Replays completions in order, regardless of prompts. The repl writes its
// transcript in this format, so a session can be replayed bit-exactly.
class ScriptedBackend : public LmBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> completions)
        : completions_(std::move(completions)) {}

    static ScriptedBackend from_transcript(std::istream& is) {
        std::vector<std::string> out;
        for (auto& e : LmTranscript::load_jsonl(is)) out.push_back(std::move(e.completion));
        return ScriptedBackend(std::move(out));
    }

    LmResult complete(const PromptBundle&) override {
        if (next_ >= completions_.size())
            throw LmError("scripted backend exhausted after " + std::to_string(next_) + " calls",
                          false);
        return {completions_[next_++], -1, -1};
    }

    std::string id() const override { return "scripted"; }

    size_t remaining() const { return completions_.size() - next_; }

private:
    std::vector<std::string> completions_;
    size_t next_ = 0;
};

enum class FaultKind {
    DropRemoval,        // a true removal is replaced by one of an absent triplet
    DropAddition,       // a true addition is replaced by a copy of a removal
    WrongEntityName,    // an entity name is corrupted to an unknown one
    WrongPredicate,     // a predicate is corrupted to an unknown one
    ArityError,         // relationship/property form flipped
    DuplicateAddition,  // an addition duplicates an existing or listed triplet
};

inline const std::vector<FaultKind>& all_fault_kinds() {
    static const std::vector<FaultKind> kinds = {
        FaultKind::DropRemoval,     FaultKind::DropAddition, FaultKind::WrongEntityName,
        FaultKind::WrongPredicate,  FaultKind::ArityError,   FaultKind::DuplicateAddition};
    return kinds;
}

inline const char* fault_name(FaultKind k) {
    switch (k) {
        case FaultKind::DropRemoval: return "drop_removal";
        case FaultKind::DropAddition: return "drop_addition";
        case FaultKind::WrongEntityName: return "wrong_entity_name";
        case FaultKind::WrongPredicate: return "wrong_predicate";
        case FaultKind::ArityError: return "arity_error";
        case FaultKind::DuplicateAddition: return "duplicate_addition";
    }
    return "?";
}

struct FaultProfile {
    double first_attempt_rate = 0.0;
    double retry_rate = 0.0;
    std::vector<FaultKind> kinds = all_fault_kinds();

    double rate_for(int attempt) const { return attempt <= 1 ? first_attempt_rate : retry_rate; }
};

// Wraps the oracle and corrupts its update answers. Draws are keyed by an
// externally supplied event counter so paired ablation runs see identical
// faults on identical events. Only update completions are mutated.
class FaultyBackend : public LmBackend {
public:
    FaultyBackend(std::shared_ptr<LmBackend> inner, FaultProfile profile, uint64_t seed,
                  std::function<const WorldGraph*()> graph_view)
        : inner_(std::move(inner)),
          profile_(std::move(profile)),
          seed_(seed),
          graph_view_(std::move(graph_view)) {}

    // The event key pins the fault draw to the event, not the call count.
    void set_event_key(uint64_t key) { event_key_ = key; }

    std::optional<FaultKind> last_injected() const { return last_injected_; }

    LmResult complete(const PromptBundle& prompt) override {
        LmResult r = inner_->complete(prompt);
        last_injected_.reset();
        if (prompt.template_id != "update") return r;

        Rng rng = Rng(seed_).fork(event_key_ * 31 + static_cast<uint64_t>(prompt.attempt));
        if (!rng.chance(profile_.rate_for(prompt.attempt))) return r;

        ParsedUpdate u = parse_update(r.text);
        const WorldGraph* g = graph_view_ ? graph_view_() : nullptr;
        // pick a fault kind that is applicable to this answer; try the drawn
        // one first, then rotate
        size_t first = rng.below(profile_.kinds.size());
        for (size_t i = 0; i < profile_.kinds.size(); ++i) {
            FaultKind kind = profile_.kinds[(first + i) % profile_.kinds.size()];
            if (apply_fault(kind, u, g, rng)) {
                last_injected_ = kind;
                r.text = u.render();
                break;
            }
        }
        return r;
    }

    std::string id() const override { return "faulty(" + inner_->id() + ")"; }

    // Applies one fault in place; false when the answer offers no purchase
    // for that fault kind (e.g. no removal to drop).
    static bool apply_fault(FaultKind kind, ParsedUpdate& u, const WorldGraph* g, Rng& rng) {
        switch (kind) {
            case FaultKind::DropRemoval: {
                if (u.removals.empty() || !g) return false;
                RawTriplet& victim = u.removals[rng.below(u.removals.size())];
                if (victim.property_form()) return false;
                const Entity* obj = g->find_entity(victim.object);
                if (!obj) return false;
                for (const auto& [name, e] : g->entities()) {
                    if (name == victim.object || e.type != obj->type) continue;
                    Triplet decoy = Triplet::rel(victim.subject, victim.predicate, name);
                    if (!g->triplets().count(decoy)) {
                        victim.object = name;
                        return true;
                    }
                }
                return false;
            }
            case FaultKind::DropAddition: {
                if (u.additions.empty() || u.removals.empty()) return false;
                u.additions[rng.below(u.additions.size())] =
                    u.removals[rng.below(u.removals.size())];
                return true;
            }
            case FaultKind::WrongEntityName: {
                auto* list = !u.additions.empty() ? &u.additions
                             : !u.removals.empty() ? &u.removals
                                                   : nullptr;
                if (!list) return false;
                (*list)[rng.below(list->size())].subject += "_misheard";
                return true;
            }
            case FaultKind::WrongPredicate: {
                auto* list = !u.additions.empty() ? &u.additions
                             : !u.removals.empty() ? &u.removals
                                                   : nullptr;
                if (!list) return false;
                (*list)[rng.below(list->size())].predicate += "_misheard";
                return true;
            }
            case FaultKind::ArityError: {
                auto* list = !u.additions.empty() ? &u.additions
                             : !u.removals.empty() ? &u.removals
                                                   : nullptr;
                if (!list) return false;
                RawTriplet& victim = (*list)[rng.below(list->size())];
                if (victim.property_form())
                    victim.object = victim.subject;  // unary predicate in relationship form
                else
                    victim.object = "true";  // binary predicate in property form
                return true;
            }
            case FaultKind::DuplicateAddition: {
                if (!u.additions.empty()) {
                    u.additions.push_back(u.additions[rng.below(u.additions.size())]);
                    return true;
                }
                if (g && !g->triplets().empty()) {
                    const Triplet& t = *g->triplets().begin();
                    RawTriplet raw{t.subject, t.predicate,
                                   t.form == Triplet::Form::Property ? "true" : t.object};
                    u.additions.push_back(std::move(raw));
                    return true;
                }
                return false;
            }
        }
        return false;
    }

private:
    std::shared_ptr<LmBackend> inner_;
    FaultProfile profile_;
    uint64_t seed_;
    std::function<const WorldGraph*()> graph_view_;
    uint64_t event_key_ = 0;
    std::optional<FaultKind> last_injected_;
};

}  // namespace kgplan
