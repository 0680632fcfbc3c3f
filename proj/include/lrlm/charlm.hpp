#pragma once
// Byte-level recurrent language model over word spellings. Pre-trained on
// the unique words of the training set, then frozen while the main model
// trains; shared across LRLM and the vanilla baseline.

#include <array>
#include <random>
#include <string>
#include <vector>

#include "lrlm/backbone.hpp"
#include "lrlm/tape.hpp"
#include "lrlm/tensor.hpp"

namespace lrlm {

class CharModel {
 public:
  static constexpr int kUnkChar = 0;  // bytes unseen at build time
  static constexpr int kBow = 1;      // beginning-of-word (input only)
  static constexpr int kEow = 2;      // end-of-word

  CharModel() = default;
  // Alphabet from the bytes of the given words.
  CharModel(const std::vector<std::string>& words, std::size_t embed_dim,
            std::size_t hidden_dim, std::mt19937_64& rng);

  // Training loss for one word: -log P(c_1..c_k, EOW | BOW).
  ad::Tape::Var nll(ad::Tape& tape, const std::string& word);

  // log P(c_1..c_k, EOW); forward-only, usable while frozen.
  double log_prob(const std::string& word) const;

  // Draws a spelling; the first symbol is never EOW (no empty spellings) and
  // the UNK byte is excluded from draws. Returns the word and its model
  // log-probability (untempered).
  std::pair<std::string, double> sample(std::mt19937_64& rng, double temperature,
                                        std::size_t max_len = 32) const;

  // All tensors including the alphabet table (for checkpointing).
  std::vector<Tensor*> tensors();
  // Tensors updated during char-LM training (alphabet excluded).
  std::vector<Tensor*> trainable_tensors();
  // Restores the byte mapping from the alphabet tensor after checkpoint load.
  void rebuild_alphabet();

  std::size_t alphabet_size() const { return id_to_byte_.size() + 3; }
  std::size_t hidden_dim() const { return enc_.hidden_size; }
  std::size_t embed_dim() const { return emb_.cols(); }

  bool frozen = false;

 private:
  std::vector<int> ids(const std::string& word) const;
  std::vector<double> step_log_probs(RecState& state, int input_id) const;

  std::array<int, 256> byte_to_id_{};  // 0 (kUnkChar) when unseen
  std::vector<unsigned char> id_to_byte_;

  Tensor alphabet_;  // 256 entries, byte -> symbol id (persisted as doubles)
  Tensor emb_;       // alphabet x E
  RecurrentEncoder enc_;
  Tensor w_out_;  // alphabet x H
  Tensor b_out_;
};

}  // namespace lrlm
