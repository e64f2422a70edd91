#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sigroute/maa2c.hpp"

namespace sigroute {

namespace {

constexpr char kMagic[8] = {'S', 'G', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

// Little-endian fixed-width fields; doubles as IEEE-754 bit patterns.
class Writer {
public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void u32(std::uint32_t v) { raw_int(v, 4); }
  void u64(std::uint64_t v) { raw_int(v, 8); }
  void f64(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void mat(const Mat& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
    }
  }

private:
  void raw_int(std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) out_.put(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  std::ostream& out_;
};

class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(raw_int(4)); }
  std::uint64_t u64() { return raw_int(8); }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }
  void mat(Mat& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = f64();
    }
  }
  void check() {
    if (!in_) throw std::runtime_error("checkpoint: truncated file");
  }

private:
  std::uint64_t raw_int(int bytes) {
    std::uint64_t v = 0;
    for (int b = 0; b < bytes; ++b) {
      const int ch = in_.get();
      if (ch == std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: truncated file");
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(ch)) << (8 * b);
    }
    return v;
  }
  std::istream& in_;
};

void write_spec(Writer& w, const NetSpec& s) {
  for (int v : s.inputs) w.u32(static_cast<std::uint32_t>(v));
  for (int v : s.widths) w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(s.lstm_units));
  w.u32(static_cast<std::uint32_t>(s.outputs));
}

NetSpec read_spec(Reader& r) {
  NetSpec s;
  for (int& v : s.inputs) v = static_cast<int>(r.u32());
  for (int& v : s.widths) v = static_cast<int>(r.u32());
  s.lstm_units = static_cast<int>(r.u32());
  s.outputs = static_cast<int>(r.u32());
  for (int v : s.inputs) {
    if (v > 100000) throw std::runtime_error("checkpoint: implausible network size");
  }
  for (int v : s.widths) {
    if (v > 100000) throw std::runtime_error("checkpoint: implausible network size");
  }
  if (s.lstm_units > 100000 || s.outputs > 100000) throw std::runtime_error("checkpoint: implausible network size");
  return s;
}

void write_net(Writer& w, const Net& net) {
  write_spec(w, net.spec());
  for (const Param* p : net.params()) {
    w.mat(p->value);
    w.mat(p->m);
    w.mat(p->v);
    w.u64(static_cast<std::uint64_t>(p->step));
  }
}

Net read_net(Reader& r) {
  Net net(read_spec(r));
  for (Param* p : net.params()) {
    r.mat(p->value);
    r.mat(p->m);
    r.mat(p->v);
    p->step = static_cast<long>(r.u64());
  }
  return net;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (ckpt.names.size() != ckpt.nets.size()) throw std::invalid_argument("checkpoint: names and nets differ in count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.u32(kVersion);
  w.u64(ckpt.seed);
  w.u64(static_cast<std::uint64_t>(ckpt.episodes));
  w.u64(static_cast<std::uint64_t>(ckpt.steps));
  w.u32(static_cast<std::uint32_t>(ckpt.nets.size()));
  for (std::size_t i = 0; i < ckpt.nets.size(); ++i) {
    w.str(ckpt.names[i]);
    write_net(w, ckpt.nets[i].policy);
    write_net(w, ckpt.nets[i].value);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error("not a checkpoint: " + path.string());
  Reader r(in);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.seed = r.u64();
  c.episodes = static_cast<long>(r.u64());
  c.steps = static_cast<long>(r.u64());
  const std::uint32_t n = r.u32();
  if (n > 100000) throw std::runtime_error("checkpoint: implausible agent count");
  for (std::uint32_t i = 0; i < n; ++i) {
    c.names.push_back(r.str());
    AgentNet net;
    net.policy = read_net(r);
    net.value = read_net(r);
    net.reset_state();
    c.nets.push_back(std::move(net));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("checkpoint: trailing bytes");
  return c;
}

void check_compatible(const Checkpoint& ckpt, const AgentSet& agents) {
  if (ckpt.nets.size() != agents.size()) {
    throw TopologyMismatch("checkpoint has " + std::to_string(ckpt.nets.size()) + " agents, scenario has " +
                           std::to_string(agents.size()));
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (ckpt.names[i] != agents.name(i)) {
      throw TopologyMismatch("agent " + std::to_string(i) + " is " + ckpt.names[i] + " in the checkpoint but " +
                             agents.name(i) + " in the scenario");
    }
    NetSpec value_spec = agent_net_spec(agents, i);
    const NetSpec policy_spec = value_spec;
    value_spec.outputs = 1;
    if (!(ckpt.nets[i].policy.spec() == policy_spec) || !(ckpt.nets[i].value.spec() == value_spec)) {
      throw TopologyMismatch("network dimensions of " + agents.name(i) + " do not match the scenario");
    }
  }
}

}  // namespace sigroute
