#pragma once

#include "selfendorse/chat.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace selfendorse {

/// A synthetic biography world that answers every prompt the pipeline and
/// the baselines send. Each person has a fixed set of attribute slots with a
/// true sentence and a conflicting false sentence. A sample mentions each
/// slot with probability `mention_rate` and states it truthfully with
/// probability `truth_rate`, both drawn from (person, seed hint).
///
/// Verification is exact: True when the context states the fact, False when
/// it states the other sentence of the same slot, Inconclusive otherwise.
class BioWorld {
public:
    struct Options {
        double mention_rate = 0.9;
        double truth_rate = 0.85;
        std::uint64_t seed = 0;
    };

    struct Slot {
        std::string true_sentence;
        std::string false_sentence;
    };

    explicit BioWorld(std::vector<std::string> people, Options options);
    explicit BioWorld(std::vector<std::string> people) : BioWorld(std::move(people), Options{}) {}

    /// Deterministic reply to any request; usable as a CallbackBackend handler.
    std::string reply(const ChatRequest& request) const;

    /// The sampled biography for a person and seed hint (greedy when unset).
    std::string biography(const std::string& person, std::optional<std::int64_t> seed_hint) const;

    const std::vector<std::string>& people() const noexcept { return people_; }
    const std::vector<Slot>& slots(const std::string& person) const;
    std::vector<std::string> true_facts(const std::string& person) const;
    bool is_true(const std::string& sentence) const;

    /// Writes <dir>/entities.txt and <dir>/facts.jsonl (the oracle bank,
    /// keyed by the ids load_dataset assigns).
    void write_dataset(const std::filesystem::path& dir) const;

    /// Names generated from a seed; distinct, two words, no periods.
    static std::vector<std::string> make_people(std::size_t count, std::uint64_t seed);

private:
    struct SlotRef {
        std::string person;
        std::size_t slot = 0;
        bool truthful = false;
    };

    std::string verify_reply(const std::string& prompt) const;

    std::vector<std::string> people_;
    Options options_;
    std::map<std::string, std::vector<Slot>> slots_;
    std::map<std::string, SlotRef> by_sentence_;
};

/// Writes a self-contained demo under `dir`: entities.txt, facts.jsonl and
/// script.jsonl, a recording of the world answering every request made by
/// the methods at N=10, K=3, alpha=0.8 plus the alpha sweep
/// {0, 0.2, ..., 1}, the K sweep {1, 3, 5, ALL} and the N sweep
/// {2, 4, 6, 8, 10}, all with seed 0.
void write_demo(const std::filesystem::path& dir, std::size_t people, std::uint64_t world_seed);

}  // namespace selfendorse
