#include "hydra/synthdata.hpp"

#include <limits>
#include <random>

#include "hydra/util.hpp"

namespace hydra {

namespace {

// Shared pools: the corpus deliberately covers every word the agreement task
// uses, so a vocabulary built from the corpus leaves no task word unknown.
const std::vector<std::string> kSingNouns = {"dog",   "cat",   "bird",    "child",  "teacher",
                                             "house", "tree",  "car",     "river",  "door",
                                             "song",  "city",  "team",    "book",   "road"};
const std::vector<std::string> kPlurNouns = {"dogs",  "cats",  "birds",   "children",
                                             "teachers", "houses", "trees", "cars"};
const std::vector<std::string> kSingVerbs = {"runs", "jumps", "sleeps", "sings", "waits",
                                             "sees", "finds", "follows", "opens", "keeps"};
const std::vector<std::string> kPlurVerbs = {"run", "jump", "sleep", "sing", "wait"};
const std::vector<std::string> kAdjectives = {"big",  "small", "red",   "old",
                                              "new",  "quiet", "bright", "dark"};
const std::vector<std::string> kDeterminers = {"the", "a", "this"};
const std::vector<std::string> kPrepositions = {"near", "in", "on", "under", "with"};
const std::vector<std::string> kAdverbs = {"today", "now", "quickly", "slowly"};

struct SentenceBuilder {
    std::vector<std::string> tokens;
    std::vector<int> heads;

    // Returns the 1-based position of the added token.
    int add(const std::string& tok, int head) {
        tokens.push_back(tok);
        heads.push_back(head);
        return static_cast<int>(tokens.size());
    }
    void set_head(int pos, int head) { heads[static_cast<std::size_t>(pos - 1)] = head; }
};

const std::string& pick(const std::vector<std::string>& pool, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, pool.size() - 1);
    return pool[dist(rng)];
}

bool coin(std::mt19937_64& rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Noun phrase with optional determiner and adjectives; modifiers attach to
// the noun. Returns the noun's position.
int make_np(SentenceBuilder& b, std::mt19937_64& rng) {
    std::vector<int> modifiers;
    if (coin(rng, 0.7)) modifiers.push_back(b.add(pick(kDeterminers, rng), 0));
    while (modifiers.size() < 3 && coin(rng, 0.3)) {
        modifiers.push_back(b.add(pick(kAdjectives, rng), 0));
    }
    const std::vector<std::string>& nouns = coin(rng, 0.75) ? kSingNouns : kPlurNouns;
    const int noun = b.add(pick(nouns, rng), 0);
    for (int pos : modifiers) b.set_head(pos, noun);
    return noun;
}

}  // namespace

std::vector<ParsedSentence> make_dependency_corpus(int n_sentences, std::uint64_t seed) {
    std::mt19937_64 rng = seeded_rng(seed, "synth.corpus");
    std::vector<ParsedSentence> corpus;
    corpus.reserve(static_cast<std::size_t>(n_sentences));
    for (int i = 0; i < n_sentences; ++i) {
        SentenceBuilder b;
        const int subj = make_np(b, rng);
        const std::vector<std::string>& verbs = coin(rng, 0.75) ? kSingVerbs : kPlurVerbs;
        const int verb = b.add(pick(verbs, rng), 0);
        b.set_head(subj, verb);

        int attach_obj = 0;
        if (coin(rng, 0.7)) {
            attach_obj = make_np(b, rng);
            b.set_head(attach_obj, verb);
        } else if (coin(rng, 0.5)) {
            b.add(pick(kAdverbs, rng), verb);
        }
        if (coin(rng, 0.35)) {
            const int prep = b.add(pick(kPrepositions, rng),
                                   attach_obj != 0 && coin(rng, 0.5) ? attach_obj : verb);
            const int pobj = make_np(b, rng);
            b.set_head(pobj, prep);
        }
        if (coin(rng, 0.9)) b.add(".", verb);

        ParsedSentence s;
        s.tokens = std::move(b.tokens);
        s.heads = std::move(b.heads);
        corpus.push_back(std::move(s));
    }
    return corpus;
}

namespace {

LabeledData make_agreement_split(int n, std::mt19937_64& rng, bool invert_cue) {
    LabeledData data;
    for (int i = 0; i < n; ++i) {
        const bool grammatical = (i % 2) == 0;
        const bool subj_plural = coin(rng, 0.5);
        const bool verb_plural = grammatical ? subj_plural : !subj_plural;

        std::string text = "the ";
        text += subj_plural ? pick(kPlurNouns, rng) : pick(kSingNouns, rng);
        if (coin(rng, 0.5)) {
            text += " near the ";
            text += coin(rng, 0.5) ? pick(kPlurNouns, rng) : pick(kSingNouns, rng);
        }
        text += ' ';
        text += verb_plural ? pick(kPlurVerbs, rng) : pick(kSingVerbs, rng);
        text += ' ';
        // The planted surface cue: perfectly predictive in train, flipped in dev.
        const bool cue_today = invert_cue ? !grammatical : grammatical;
        text += cue_today ? "today" : "now";
        text += " .";

        LabeledExample ex;
        ex.text = std::move(text);
        ex.raw_label = grammatical ? "grammatical" : "ungrammatical";
        data.examples.push_back(std::move(ex));
    }
    // First-seen order: i = 0 is grammatical.
    data.class_names = {"grammatical", "ungrammatical"};
    for (LabeledExample& ex : data.examples) {
        ex.class_id = ex.raw_label == "grammatical" ? 0 : 1;
        ex.value = std::numeric_limits<double>::quiet_NaN();
    }
    return data;
}

}  // namespace

ConfoundDataset make_agreement_confound_dataset(int n_train, int n_dev, std::uint64_t seed) {
    std::mt19937_64 rng = seeded_rng(seed, "synth.agreement");
    ConfoundDataset out;
    out.train = make_agreement_split(n_train, rng, false);
    out.dev = make_agreement_split(n_dev, rng, true);
    return out;
}

}  // namespace hydra
