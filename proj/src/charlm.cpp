#include "lrlm/charlm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lrlm {

CharModel::CharModel(const std::vector<std::string>& words,
                     std::size_t embed_dim, std::size_t hidden_dim,
                     std::mt19937_64& rng) {
  std::set<unsigned char> bytes;
  for (const auto& w : words)
    for (char c : w) bytes.insert(static_cast<unsigned char>(c));
  byte_to_id_.fill(kUnkChar);
  for (unsigned char b : bytes) {
    byte_to_id_[b] = static_cast<int>(id_to_byte_.size()) + 3;
    id_to_byte_.push_back(b);
  }
  std::size_t c = alphabet_size();
  alphabet_ = Tensor("char.alphabet", {256});
  for (std::size_t i = 0; i < 256; ++i) alphabet_.data[i] = byte_to_id_[i];
  emb_ = Tensor("char.emb", {c, embed_dim});
  emb_.init_uniform(rng, embed_dim);
  enc_ = RecurrentEncoder("char.enc", embed_dim, hidden_dim, 1, 0.0);
  enc_.init(rng);
  w_out_ = Tensor("char.w_out", {c, hidden_dim});
  w_out_.init_uniform(rng, hidden_dim);
  b_out_ = Tensor("char.b_out", {c});
}

std::vector<int> CharModel::ids(const std::string& word) const {
  std::vector<int> out;
  out.reserve(word.size());
  for (char ch : word) out.push_back(byte_to_id_[static_cast<unsigned char>(ch)]);
  return out;
}

ad::Tape::Var CharModel::nll(ad::Tape& tape, const std::string& word) {
  std::vector<int> targets = ids(word);
  targets.push_back(kEow);
  TapeState state = lift_state(tape, RecState::zero(enc_));
  int input = kBow;
  std::vector<ad::Tape::Var> terms;
  for (int target : targets) {
    ad::Tape::Var h =
        encoder_step(tape, enc_, tape.row(emb_, input), state, nullptr);
    ad::Tape::Var logp = tape.log_softmax(tape.affine(w_out_, h, b_out_));
    terms.push_back(tape.pick(logp, static_cast<std::size_t>(target)));
    input = target;
  }
  ad::Tape::Var total = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) total = tape.add(total, terms[i]);
  return tape.neg(total);
}

std::vector<double> CharModel::step_log_probs(RecState& state,
                                              int input_id) const {
  const double* row = emb_.data.data() + input_id * emb_.cols();
  ad::Vec h = plain_encoder_step(enc_, {row, emb_.cols()}, state);
  std::size_t c = alphabet_size();
  ad::Vec logits(c);
  for (std::size_t i = 0; i < c; ++i) {
    double s = b_out_.data[i];
    const double* wr = w_out_.data.data() + i * w_out_.cols();
    for (std::size_t j = 0; j < h.size(); ++j) s += wr[j] * h[j];
    logits[i] = s;
  }
  return log_softmax(logits);
}

double CharModel::log_prob(const std::string& word) const {
  std::vector<int> targets = ids(word);
  targets.push_back(kEow);
  RecState state = RecState::zero(enc_);
  int input = kBow;
  double total = 0.0;
  for (int target : targets) {
    total += step_log_probs(state, input)[static_cast<std::size_t>(target)];
    input = target;
  }
  return total;
}

std::pair<std::string, double> CharModel::sample(std::mt19937_64& rng,
                                                 double temperature,
                                                 std::size_t max_len) const {
  if (temperature <= 0.0) throw std::invalid_argument("temperature must be > 0");
  RecState state = RecState::zero(enc_);
  std::string word;
  double logp = 0.0;
  int input = kBow;
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    std::vector<double> lp = step_log_probs(state, input);
    // never draw UNK or BOW; EOW forbidden for the first symbol
    std::vector<int> allowed;
    for (std::size_t i = 3; i < lp.size(); ++i) allowed.push_back(static_cast<int>(i));
    if (pos > 0) allowed.push_back(kEow);
    std::vector<double> w(allowed.size());
    double m = -1e300;
    for (std::size_t i = 0; i < allowed.size(); ++i)
      m = std::max(m, lp[allowed[i]] / temperature);
    double sum = 0.0;
    for (std::size_t i = 0; i < allowed.size(); ++i)
      sum += w[i] = std::exp(lp[allowed[i]] / temperature - m);
    std::uniform_real_distribution<double> u(0.0, sum);
    double x = u(rng);
    std::size_t pick = 0;
    for (; pick + 1 < w.size() && x > w[pick]; ++pick) x -= w[pick];
    int sym = allowed[pick];
    logp += lp[sym];
    if (sym == kEow) return {word, logp};
    word.push_back(static_cast<char>(id_to_byte_[sym - 3]));
    input = sym;
  }
  // length cap hit: account for the forced stop
  logp += step_log_probs(state, input)[kEow];
  return {word, logp};
}

std::vector<Tensor*> CharModel::tensors() {
  std::vector<Tensor*> out{&alphabet_, &emb_, &w_out_, &b_out_};
  for (Tensor* t : enc_.tensors()) out.push_back(t);
  return out;
}

std::vector<Tensor*> CharModel::trainable_tensors() {
  std::vector<Tensor*> out{&emb_, &w_out_, &b_out_};
  for (Tensor* t : enc_.tensors()) out.push_back(t);
  return out;
}

void CharModel::rebuild_alphabet() {
  byte_to_id_.fill(kUnkChar);
  id_to_byte_.clear();
  std::vector<std::pair<int, unsigned char>> pairs;
  for (std::size_t b = 0; b < 256; ++b) {
    int id = static_cast<int>(alphabet_.data[b]);
    if (id >= 3) pairs.emplace_back(id, static_cast<unsigned char>(b));
    byte_to_id_[b] = id;
  }
  std::sort(pairs.begin(), pairs.end());
  for (auto& [id, b] : pairs) id_to_byte_.push_back(b);
}

}  // namespace lrlm
