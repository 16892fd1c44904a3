#pragma once

#include <cstdint>
#include <vector>

#include "hydra/conllu.hpp"
#include "hydra/dataset.hpp"

namespace hydra {

// Deterministic template-generated treebank: noun phrases, a finite verb, an
// optional object and prepositional phrase, with consistent head links.
// Intended for demos and training runs where no real treebank is at hand.
std::vector<ParsedSentence> make_dependency_corpus(int n_sentences, std::uint64_t seed);

// Binary grammaticality task with a planted surface confound: subject-verb
// number agreement decides the label, while an adverb correlates with the
// label in train and is inverted in dev. A model reading the adverb alone
// scores near zero on dev.
struct ConfoundDataset {
    LabeledData train;
    LabeledData dev;
};
ConfoundDataset make_agreement_confound_dataset(int n_train, int n_dev, std::uint64_t seed);

}  // namespace hydra
