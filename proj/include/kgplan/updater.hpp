#pragma once
// NL state updates end to end: retrieve context, prompt the LM for a
// REMOVE/ADD delta, verify it against the domain and current graph, re-prompt
// with the verifier report appended until clean or the retry cap is hit, then
// apply.
//
// The verifier is deliberately syntactic and typing-only: a well-typed delta
// that is semantically wrong (removing the wrong edge of the right entity)
// passes. Catching that class of error is retrieval's job, not the
// verifier's.

#include <string>
#include <vector>

#include "kgplan/lm.hpp"
#include "kgplan/retrieval.hpp"
#include "kgplan/world_graph.hpp"

namespace kgplan {

enum class ViolationCode {
    UnknownEntity,
    UnknownPredicate,
    WrongForm,
    TypeMismatch,
    RemoveAbsent,
    AddDuplicate,
    AddRemoveOverlap,
};

inline const char* violation_name(ViolationCode c) {
    switch (c) {
        case ViolationCode::UnknownEntity: return "unknown-entity";
        case ViolationCode::UnknownPredicate: return "unknown-predicate";
        case ViolationCode::WrongForm: return "wrong-form";
        case ViolationCode::TypeMismatch: return "type-mismatch";
        case ViolationCode::RemoveAbsent: return "remove-absent";
        case ViolationCode::AddDuplicate: return "add-duplicate";
        case ViolationCode::AddRemoveOverlap: return "add-remove-overlap";
    }
    return "?";
}

struct Violation {
    ViolationCode code;
    RawTriplet triplet;
    std::string message;
};

struct VerifierReport {
    std::vector<Violation> violations;

    bool clean() const { return violations.empty(); }

    bool has(ViolationCode code) const {
        for (const auto& v : violations)
            if (v.code == code) return true;
        return false;
    }

    std::string render() const {
        std::string out;
        for (const auto& v : violations) {
            out += "- [";
            out += violation_name(v.code);
            out += "] " + v.message + "\n";
        }
        return out;
    }
};

namespace detail {

// Structural screening of one raw triplet; nullopt when it is well-formed
// and well-typed against the graph's entities and domain signatures.
inline std::optional<Violation> screen_triplet(const RawTriplet& t, const WorldGraph& g) {
    const Domain& d = *g.domain();
    const Entity* subj = g.find_entity(t.subject);
    if (!subj)
        return Violation{ViolationCode::UnknownEntity, t,
                         "unknown entity '" + t.subject + "' in " + t.str()};
    const Predicate* pred = d.find_predicate(t.predicate);
    if (!pred)
        return Violation{ViolationCode::UnknownPredicate, t,
                         "unknown predicate '" + t.predicate + "' in " + t.str()};
    if (t.property_form()) {
        if (t.object == "false")
            return Violation{ViolationCode::WrongForm, t,
                             "property triplets are closed-world; to make " + t.subject + "/" +
                                 t.predicate + " false, remove the true triplet instead"};
        if (pred->arity() != 1)
            return Violation{ViolationCode::WrongForm, t,
                             "predicate '" + t.predicate + "' is binary but " + t.str() +
                                 " uses property form"};
        if (!d.is_subtype(subj->type, pred->params[0].type))
            return Violation{ViolationCode::TypeMismatch, t,
                             "type mismatch in " + t.str() + ": argument 1 ('" + t.subject +
                                 "' of type " + subj->type + ") is not a " +
                                 pred->params[0].type};
        return std::nullopt;
    }
    if (pred->arity() != 2)
        return Violation{ViolationCode::WrongForm, t,
                         "predicate '" + t.predicate + "' is unary but " + t.str() +
                             " uses relationship form"};
    const Entity* obj = g.find_entity(t.object);
    if (!obj)
        return Violation{ViolationCode::UnknownEntity, t,
                         "unknown entity '" + t.object + "' in " + t.str()};
    if (!d.is_subtype(subj->type, pred->params[0].type))
        return Violation{ViolationCode::TypeMismatch, t,
                         "type mismatch in " + t.str() + ": argument 1 ('" + t.subject +
                             "' of type " + subj->type + ") is not a " + pred->params[0].type};
    if (!d.is_subtype(obj->type, pred->params[1].type))
        return Violation{ViolationCode::TypeMismatch, t,
                         "type mismatch in " + t.str() + ": argument 2 ('" + t.object +
                             "' of type " + obj->type + ") is not a " + pred->params[1].type};
    return std::nullopt;
}

}  // namespace detail

// Complete report: every triplet is screened, and relational checks run on
// the structurally clean ones. An empty report is exactly the condition for
// apply_delta to succeed.
inline VerifierReport verify(const ParsedUpdate& u, const WorldGraph& g) {
    VerifierReport report;

    std::vector<char> removal_ok(u.removals.size(), 0);
    for (size_t i = 0; i < u.removals.size(); ++i) {
        if (auto v = detail::screen_triplet(u.removals[i], g))
            report.violations.push_back(std::move(*v));
        else
            removal_ok[i] = 1;
    }
    TripletSet removal_set;
    for (size_t i = 0; i < u.removals.size(); ++i) {
        if (!removal_ok[i]) continue;
        Triplet t = u.removals[i].to_triplet();
        if (!g.triplets().count(t))
            report.violations.push_back({ViolationCode::RemoveAbsent, u.removals[i],
                                         "removal of absent triplet " + u.removals[i].str()});
        removal_set.insert(std::move(t));
    }

    TripletSet seen_additions;
    for (const auto& raw : u.additions) {
        if (auto v = detail::screen_triplet(raw, g)) {
            report.violations.push_back(std::move(*v));
            continue;
        }
        Triplet t = raw.to_triplet();
        if (removal_set.count(t)) {
            report.violations.push_back({ViolationCode::AddRemoveOverlap, raw,
                                         "triplet " + raw.str() +
                                             " appears in both REMOVE and ADD"});
            continue;
        }
        if (g.triplets().count(t)) {
            report.violations.push_back({ViolationCode::AddDuplicate, raw,
                                         "addition " + raw.str() + " already holds"});
            continue;
        }
        if (!seen_additions.insert(t).second)
            report.violations.push_back({ViolationCode::AddDuplicate, raw,
                                         "addition " + raw.str() + " is listed twice"});
    }
    return report;
}

inline GraphDelta to_delta(const ParsedUpdate& u, DeltaSource source) {
    GraphDelta d;
    d.source = source;
    for (const auto& t : u.removals) d.removals.insert(t.to_triplet());
    for (const auto& t : u.additions) d.additions.insert(t.to_triplet());
    return d;
}

struct UpdaterConfig {
    int retry_cap = 3;
    bool use_verifier = true;
};

struct UpdateAttempt {
    std::string completion;
    bool parse_failed = false;
    std::string parse_error;
    VerifierReport report;
};

struct UpdateOutcome {
    bool success = false;
    GraphDelta delta;
    int attempts_used = 0;
    std::vector<UpdateAttempt> attempts;
    std::string failure;           // set when !success
    size_t transcript_first = 0;   // entry range in the gateway transcript
    size_t transcript_last = 0;
    RetrievalDiagnostics retrieval;
};

// Algorithm: retrieve, prompt, parse, verify, re-prompt with accumulated
// errors, apply. Returns the outcome plus the next graph (unchanged on
// failure). With the verifier off, whatever parses is applied with set
// semantics, mirroring the unverified ablations.
inline std::pair<UpdateOutcome, WorldGraph> process_nl_update(const WorldGraph& g,
                                                              const std::string& update_text,
                                                              const Retriever& retriever,
                                                              LmGateway& gw,
                                                              const UpdaterConfig& cfg = {}) {
    UpdateOutcome outcome;
    outcome.transcript_first = gw.transcript().size();

    RetrievalResult retrieved = retriever.retrieve(g, update_text, gw);
    outcome.retrieval = retrieved.diagnostics;

    std::vector<std::string> entity_names;
    for (const auto& [name, e] : g.entities()) entity_names.push_back(name);
    std::string entities = join(entity_names, ", ");
    std::string context = render_context(retrieved.relevant);

    std::string errors_text;
    for (int attempt = 1; attempt <= cfg.retry_cap; ++attempt) {
        outcome.attempts_used = attempt;
        PromptBundle bundle = gw.make_prompt("update", {{"entities", entities},
                                                        {"context", context},
                                                        {"update", update_text},
                                                        {"errors", errors_text}},
                                             attempt);
        UpdateAttempt record;
        record.completion = gw.complete(bundle);

        ParsedUpdate parsed;
        try {
            parsed = parse_update(record.completion);
        } catch (const OutputParseError& e) {
            record.parse_failed = true;
            record.parse_error = e.what();
            outcome.attempts.push_back(std::move(record));
            errors_text += "\nYour previous reply did not follow the REMOVE:/ADD: format: " +
                           std::string(e.what());
            continue;
        }

        if (!cfg.use_verifier) {
            outcome.attempts.push_back(std::move(record));
            outcome.delta = to_delta(parsed, DeltaSource::Verbal);
            outcome.success = true;
            outcome.transcript_last = gw.transcript().size();
            return {outcome, g.apply_delta_unchecked(outcome.delta)};
        }

        record.report = verify(parsed, g);
        bool clean = record.report.clean();
        outcome.attempts.push_back(record);
        if (clean) {
            outcome.delta = to_delta(parsed, DeltaSource::Verbal);
            outcome.success = true;
            outcome.transcript_last = gw.transcript().size();
            // E_{t+1} = E_t^irrel + (E_t^rel - E^- + E^+); with a verified
            // delta this coincides with plain set application
            return {outcome, g.apply_delta(outcome.delta)};
        }
        errors_text += "\nYour previous update was rejected:\n" + record.report.render();
    }

    outcome.failure = "retry cap of " + std::to_string(cfg.retry_cap) + " exhausted";
    outcome.transcript_last = gw.transcript().size();
    return {outcome, g};
}

// Perception deltas arrive already structured; they are applied directly
// after the invariant checks, with no LM and no retry loop.
inline WorldGraph process_perception_update(const WorldGraph& g, GraphDelta delta) {
    delta.source = DeltaSource::Perception;
    return g.apply_delta(delta);
}

}  // namespace kgplan
