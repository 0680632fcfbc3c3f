#include "lrlm/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lrlm {

namespace {

constexpr std::uint32_t kMagic = 0x4C524C4D;  // "LRLM"
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_str(std::string& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out += s;
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > data.size())
      throw CheckpointError("corrupt checkpoint: truncated");
    T v;
    std::memcpy(&v, data.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string get_str() {
    auto n = get<std::uint64_t>();
    if (pos + n > data.size())
      throw CheckpointError("corrupt checkpoint: truncated");
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
  std::vector<double> get_doubles(std::size_t n) {
    if (pos + n * sizeof(double) > data.size())
      throw CheckpointError("corrupt checkpoint: truncated");
    std::vector<double> v(n);
    std::memcpy(v.data(), data.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
    return v;
  }
};

void put_doubles(std::string& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

}  // namespace

void save_checkpoint(const std::string& path, std::span<Tensor* const> tensors,
                     const Adam* opt) {
  std::string body;
  put<std::uint64_t>(body, tensors.size());
  for (const Tensor* t : tensors) {
    put_str(body, t->name);
    put<std::uint64_t>(body, t->shape.size());
    for (auto d : t->shape) put<std::uint64_t>(body, d);
    body.append(reinterpret_cast<const char*>(t->data.data()),
                t->data.size() * sizeof(double));
  }
  put<std::uint8_t>(body, opt ? 1 : 0);
  if (opt) {
    put<double>(body, opt->cfg.lr);
    put<double>(body, opt->cfg.beta1);
    put<double>(body, opt->cfg.beta2);
    put<double>(body, opt->cfg.eps);
    put<std::uint64_t>(body, opt->t);
    put<std::uint64_t>(body, opt->moments.size());
    for (const auto& [name, mv] : opt->moments) {
      put_str(body, name);
      put_doubles(body, mv.first);
      put_doubles(body, mv.second);
    }
  }

  std::string out;
  put<std::uint32_t>(out, kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, fnv1a(body));
  out += body;

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("write failed: " + path);
}

void load_checkpoint(const std::string& path, std::span<Tensor* const> tensors,
                     Adam* opt) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string data = ss.str();

  Reader r{data};
  if (r.get<std::uint32_t>() != kMagic)
    throw CheckpointError("not a checkpoint file: " + path);
  auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw CheckpointError("checkpoint version mismatch: got " +
                          std::to_string(version) + ", expected " +
                          std::to_string(kVersion));
  auto checksum = r.get<std::uint64_t>();
  if (checksum != fnv1a(data.substr(r.pos)))
    throw CheckpointError("corrupt checkpoint: checksum mismatch in " + path);

  auto count = r.get<std::uint64_t>();
  std::map<std::string, Tensor*> by_name;
  for (Tensor* t : tensors) by_name[t->name] = t;
  std::size_t filled = 0;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.get_str();
    auto ndim = r.get<std::uint64_t>();
    std::vector<std::size_t> shape;
    std::size_t size = 1;
    for (std::uint64_t d = 0; d < ndim; ++d) {
      shape.push_back(r.get<std::uint64_t>());
      size *= shape.back();
    }
    std::vector<double> vals = r.get_doubles(size);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint tensor '" + name +
                            "' has no destination");
    it->second->shape = std::move(shape);
    it->second->data = std::move(vals);
    it->second->grad.assign(size, 0.0);
    ++filled;
  }
  if (filled != by_name.size())
    throw CheckpointError("checkpoint is missing " +
                          std::to_string(by_name.size() - filled) + " tensors");

  auto has_opt = r.get<std::uint8_t>();
  if (opt) {
    if (!has_opt)
      throw CheckpointError("checkpoint has no optimizer state: " + path);
    opt->cfg.lr = r.get<double>();
    opt->cfg.beta1 = r.get<double>();
    opt->cfg.beta2 = r.get<double>();
    opt->cfg.eps = r.get<double>();
    opt->t = r.get<std::uint64_t>();
    opt->moments.clear();
    auto nmom = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < nmom; ++i) {
      std::string name = r.get_str();
      auto m = r.get_doubles(r.get<std::uint64_t>());
      auto v = r.get_doubles(r.get<std::uint64_t>());
      opt->moments[name] = {std::move(m), std::move(v)};
    }
  }
}

}  // namespace lrlm
