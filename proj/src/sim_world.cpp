#include "selfendorse/sim_world.hpp"

#include "selfendorse/decompose.hpp"
#include "selfendorse/errors.hpp"
#include "selfendorse/dataset.hpp"
#include "selfendorse/gateway.hpp"
#include "selfendorse/kmeans.hpp"
#include "selfendorse/runner.hpp"
#include "selfendorse/scripted_backend.hpp"
#include "selfendorse/serialize.hpp"
#include "selfendorse/text.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace selfendorse {

namespace {

const std::vector<std::string> kCities = {"Oslo",  "Lisbon", "Dublin", "Krakow", "Porto", "Ghent",
                                          "Turin", "Leeds",  "Bergen", "Graz",   "Malmo", "Tartu"};
const std::vector<std::string> kProfessions = {"chemist",  "painter",      "architect", "violinist", "surgeon",
                                               "novelist", "engineer",     "botanist",  "astronomer", "cartographer"};
const std::vector<std::string> kUniversities = {"University of Vienna", "University of Leiden", "University of Uppsala",
                                                "University of Padua",  "University of Bologna", "University of Basel"};
const std::vector<std::string> kAwards = {"Hale Medal", "Lorne Prize", "Vesper Award", "Corwin Medal", "Ardent Prize",
                                          "Marlow Cup"};
const std::vector<std::string> kCountries = {"Canada", "Chile", "Japan", "Kenya", "Norway", "Peru", "Iceland"};
const std::vector<std::string> kInstruments = {"cello", "oboe", "harp", "piano", "viola", "flute"};
const std::vector<std::string> kChildren = {"no", "two", "three", "four", "five"};

const std::vector<std::string> kFirstNames = {"Maren", "Tobias", "Ilse",  "Casimir", "Odette", "Anselm", "Liesel",
                                              "Rafael", "Sunniva", "Emeric", "Ottilie", "Benedikt", "Halvard", "Solveig"};
const std::vector<std::string> kLastNames = {"Holt",   "Varga",  "Lindqvist", "Moreau", "Castell", "Brandt",
                                             "Okafor", "Ferreira", "Nakamura", "Quist",  "Delacroix", "Szabo"};

constexpr std::size_t kYears = 90;  // birth years 1900..1989

std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 1469598103934665603ULL)
{
    std::uint64_t h = basis;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double unit(std::uint64_t& state)
{
    return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

std::string article(const std::string& noun)
{
    return std::string("aeiou").find(noun.front()) != std::string::npos ? "an" : "a";
}

/// Text between `open` and `close` (or the end); npos-safe.
std::string between(const std::string& text, std::string_view open, std::string_view close)
{
    const auto start = text.find(open);
    if (start == std::string::npos) return {};
    const auto from = start + open.size();
    const auto end = close.empty() ? std::string::npos : text.find(close, from);
    return text.substr(from, end == std::string::npos ? std::string::npos : end - from);
}

std::string numbered(const std::vector<std::string>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += std::to_string(i + 1) + ". " + items[i];
    }
    return out;
}

}  // namespace

BioWorld::BioWorld(std::vector<std::string> people, Options options)
    : people_(std::move(people)), options_(options)
{
    for (const auto& person : people_) {
        auto& slots = slots_[person];
        std::size_t slot_index = 0;
        auto add = [&](const std::vector<std::string>& values, auto sentence) {
            std::uint64_t state = fnv1a(person, options_.seed + 0x9e37 * (slot_index + 1));
            const auto t = splitmix64(state) % values.size();
            const auto f = (t + 1 + splitmix64(state) % (values.size() - 1)) % values.size();
            slots.push_back({sentence(values[t]), sentence(values[f])});
            ++slot_index;
        };
        std::vector<std::string> years;
        for (std::size_t y = 0; y < kYears; ++y) years.push_back(std::to_string(1900 + y));

        add(kCities, [&](const std::string& v) { return person + " was born in " + v + "."; });
        add(years, [&](const std::string& v) { return person + " was born in the year " + v + "."; });
        add(kProfessions, [&](const std::string& v) { return person + " worked as " + article(v) + " " + v + "."; });
        add(kUniversities, [&](const std::string& v) { return person + " studied at the " + v + "."; });
        add(kAwards, [&](const std::string& v) { return person + " received the " + v + "."; });
        add(kCountries, [&](const std::string& v) { return person + " spent most of their life in " + v + "."; });
        add(kInstruments, [&](const std::string& v) { return person + " played the " + v + "."; });
        add(kChildren, [&](const std::string& v) { return person + " had " + v + " children."; });

        for (std::size_t s = 0; s < slots.size(); ++s) {
            by_sentence_[slots[s].true_sentence] = {person, s, true};
            by_sentence_[slots[s].false_sentence] = {person, s, false};
        }
    }
}

const std::vector<BioWorld::Slot>& BioWorld::slots(const std::string& person) const
{
    const auto it = slots_.find(person);
    if (it == slots_.end()) throw PreconditionError("unknown person " + person);
    return it->second;
}

std::vector<std::string> BioWorld::true_facts(const std::string& person) const
{
    std::vector<std::string> out;
    for (const auto& slot : slots(person)) out.push_back(slot.true_sentence);
    return out;
}

bool BioWorld::is_true(const std::string& sentence) const
{
    const auto it = by_sentence_.find(trim(sentence));
    return it != by_sentence_.end() && it->second.truthful;
}

std::string BioWorld::biography(const std::string& person, std::optional<std::int64_t> seed_hint) const
{
    const auto& person_slots = slots(person);
    std::uint64_t state = fnv1a(person, options_.seed) ^ (seed_hint ? static_cast<std::uint64_t>(*seed_hint) * 0x2545F4914F6CDD1DULL
                                                                    : 0xdeadbeefULL);
    std::vector<std::string> sentences;
    for (const auto& slot : person_slots) {
        const bool mention = unit(state) < options_.mention_rate;
        const bool truthful = unit(state) < options_.truth_rate;
        if (mention) sentences.push_back(truthful ? slot.true_sentence : slot.false_sentence);
    }
    if (sentences.empty()) sentences.push_back(person_slots.front().true_sentence);
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out.push_back(' ');
        out += s;
    }
    return out;
}

std::string BioWorld::verify_reply(const std::string& prompt) const
{
    const auto context = between(prompt, "Take the following as truth: ", "\nThen the following statement: \"");
    const auto statement = between(prompt, "Then the following statement: \"", "\" is true, false, or inconclusive?");
    if (context.find(statement) != std::string::npos) return "True.";
    const auto it = by_sentence_.find(statement);
    if (it != by_sentence_.end()) {
        const auto& slot = slots_.at(it->second.person)[it->second.slot];
        const auto& other = it->second.truthful ? slot.false_sentence : slot.true_sentence;
        if (context.find(other) != std::string::npos) return "False.";
    }
    return "Inconclusive.";
}

std::string BioWorld::reply(const ChatRequest& request) const
{
    const auto prompt = request.prompt_text();
    constexpr std::string_view bio = "Tell me a bio of ";
    if (prompt.rfind(bio, 0) == 0) {
        const auto person = trim(prompt.substr(bio.size()));
        if (!slots_.count(person)) return "I could not find any information about " + person + ".";
        return biography(person, request.seed_hint);
    }
    if (prompt.rfind("List all non-repeated facts", 0) == 0) {
        const auto text = between(prompt, "Each fact should be a self-contained sentence: ", "");
        const auto sentences = split_sentences(text);
        return sentences.empty() ? std::string("There are no facts in the text.") : numbered(sentences);
    }
    if (prompt.rfind("Take the following as truth: ", 0) == 0) {
        return verify_reply(prompt);
    }
    if (prompt.rfind("Knowledge from other sources:\n", 0) == 0) {
        const auto facts = parse_numbered_list(between(prompt, "Knowledge from other sources:\n", "\nGiven the materials above"));
        std::string out;
        for (const auto& f : facts) {
            if (!out.empty()) out.push_back(' ');
            out += f;
        }
        return out;
    }
    if (prompt.rfind("I have generated the following responses", 0) == 0) {
        return "The most consistent response is Response 1.";
    }
    if (prompt.find("Verification questions and independently obtained answers") != std::string::npos) {
        return trim(between(prompt, "Draft answer:\n", "\n\nVerification questions"));
    }
    if (prompt.find("Write a numbered list of verification questions") != std::string::npos) {
        const auto topic = trim(between(prompt, "Tell me a bio of ", "\n"));
        return "1. Where was " + topic + " born?\n2. What did " + topic + " work as?";
    }
    if (prompt.rfind("Answer the following question concisely", 0) == 0) {
        return "I am not certain.";
    }
    if (prompt.find("Here is a previous answer to the question:\n") != std::string::npos) {
        return trim(between(prompt, "Here is a previous answer to the question:\n", "\n\nReview the previous answer"));
    }
    if (prompt.rfind("Evidence about ", 0) == 0) {
        return is_true(between(prompt, "Statement: ", "")) ? "True" : "False";
    }
    return "I don't know.";
}

void BioWorld::write_dataset(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    std::ofstream entities(dir / "entities.txt", std::ios::trunc);
    std::ofstream bank(dir / "facts.jsonl", std::ios::trunc);
    if (!entities || !bank) throw Error("cannot write dataset under " + dir.string());
    for (std::size_t i = 0; i < people_.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "bio-%04zu", i);
        entities << people_[i] << '\n';
        bank << Json{{"id", id}, {"facts", true_facts(people_[i])}}.dump() << '\n';
    }
}

std::vector<std::string> BioWorld::make_people(std::size_t count, std::uint64_t seed)
{
    const auto capacity = kFirstNames.size() * kLastNames.size();
    if (count > capacity) throw PreconditionError("at most " + std::to_string(capacity) + " distinct people");
    std::set<std::string> seen;
    std::vector<std::string> out;
    std::uint64_t state = seed;
    while (out.size() < count) {
        auto name = kFirstNames[splitmix64(state) % kFirstNames.size()] + " " +
                    kLastNames[splitmix64(state) % kLastNames.size()];
        if (seen.insert(name).second) out.push_back(std::move(name));
    }
    return out;
}

void write_demo(const std::filesystem::path& dir, std::size_t people, std::uint64_t world_seed)
{
    auto world = std::make_shared<BioWorld>(BioWorld::make_people(people, world_seed), BioWorld::Options{});
    world->write_dataset(dir);
    auto recorder = std::make_shared<RecordingBackend>(
        std::make_shared<CallbackBackend>([world](const ChatRequest& r) { return world->reply(r); }));
    Gateway gateway(recorder);
    const PromptCatalog prompts;
    const auto examples = load_dataset(dir / "entities.txt", TaskKind::longform);

    PipelineConfig base;
    base.alpha = 0.8;
    std::vector<std::pair<Method, PipelineConfig>> plan;
    for (auto method : {Method::endorse_regenerate, Method::endorse_select, Method::base, Method::usc, Method::cove,
                        Method::refine}) {
        plan.emplace_back(method, base);
    }
    for (const char* alpha : {"0", "0.2", "0.4", "0.6", "0.8", "1"}) {
        auto c = base;
        apply_axis(c, SweepAxis::alpha, alpha);
        plan.emplace_back(Method::endorse_regenerate, c);
    }
    for (const char* k : {"1", "3", "5", "ALL"}) {
        auto c = base;
        apply_axis(c, SweepAxis::k, k);
        plan.emplace_back(Method::endorse_regenerate, c);
    }
    for (const char* n : {"2", "4", "6", "8", "10"}) {
        auto c = base;
        apply_axis(c, SweepAxis::n, n);
        plan.emplace_back(Method::endorse_regenerate, c);
    }
    for (const auto& [method, config] : plan) {
        for (const auto& ex : examples) {
            const auto record = run_query(ex.query, method, config, gateway, prompts, "demo");
            if (record.status != "complete") throw Error("demo recording failed for " + ex.id + ": " + record.error);
        }
    }
    recorder->write_script(dir / "script.jsonl");
}

}  // namespace selfendorse
