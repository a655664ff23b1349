#include <bit>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "jrt/error.hpp"
#include "jrt/layers.hpp"
#include "jrt/train.hpp"

namespace jrt {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian host");

namespace {

constexpr char kMagic[4] = {'J', 'R', 'T', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class U>
  void pod(U v) {
    bytes(&v, sizeof v);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}

  void bytes(void* dst, std::size_t n) {
    if (n > n_ - pos_) throw FormatError("checkpoint: truncated at byte " + std::to_string(pos_));
    std::memcpy(dst, p_ + pos_, n);
    pos_ += n;
  }
  template <class U>
  U pod() {
    U v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool done() const { return pos_ == n_; }

 private:
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

std::uint32_t crc(const std::uint8_t* p, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, p, chunk);
    p += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

template <std::floating_point T>
Checkpoint<T> decode_body(Reader& r, std::uint64_t step, std::uint64_t epoch,
                          const TrainConfig& cfg) {
  Checkpoint<T> ck;
  ck.config = cfg;
  ck.epoch = epoch;
  ck.optimizer.step = step;
  const auto layout = param_layout(cfg.model);
  const auto count = r.pod<std::uint32_t>();
  if (count != layout.size()) {
    throw FormatError("checkpoint: " + std::to_string(count) + " blocks, config implies " +
                      std::to_string(layout.size()));
  }
  for (const BlockSpec& spec : layout) {
    const std::string name = r.str();
    if (name != spec.name) {
      throw FormatError("checkpoint: expected block " + spec.name + ", found " + name);
    }
    const auto rank = r.pod<std::uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError("checkpoint: block " + name + " has bad rank");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.pod<std::uint64_t>());
    if (shape != spec.shape) {
      throw FormatError("checkpoint: block " + name + " has shape " + to_string(shape) +
                        ", expected " + to_string(spec.shape));
    }
    Tensor<T> value(shape), m(shape), v(shape);
    for (Tensor<T>* t : {&value, &m, &v}) r.bytes(t->raw(), t->size() * sizeof(T));
    ck.params.add(name, std::move(value));
    ck.optimizer.m.add(name, std::move(m));
    ck.optimizer.v.add(name, std::move(v));
  }
  return ck;
}

}  // namespace

template <std::floating_point T>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>& ck) {
  if (!ck.params.same_layout(ck.optimizer.m) || !ck.params.same_layout(ck.optimizer.v)) {
    throw ShapeError("checkpoint: optimizer moments do not match parameters");
  }
  Writer w;
  w.bytes(kMagic, 4);
  w.pod(static_cast<std::uint8_t>(sizeof(T)));
  w.pod(static_cast<std::uint64_t>(ck.optimizer.step));
  w.pod(static_cast<std::uint64_t>(ck.epoch));
  w.str(ck.config.to_json());
  w.pod(static_cast<std::uint32_t>(ck.params.size()));
  for (std::size_t b = 0; b < ck.params.size(); ++b) {
    const auto& blk = ck.params.blocks()[b];
    w.str(blk.name);
    w.pod(static_cast<std::uint32_t>(blk.value.rank()));
    for (std::size_t d : blk.value.shape()) w.pod(static_cast<std::uint64_t>(d));
    for (const ParamSet<T>* set : {&ck.params, &ck.optimizer.m, &ck.optimizer.v}) {
      const auto& t = set->blocks()[b].value;
      w.bytes(t.raw(), t.size() * sizeof(T));
    }
  }
  auto& buf = w.buffer();
  const std::uint32_t c = crc(buf.data(), buf.size());
  w.pod(c);
  return std::move(buf);
}

AnyCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 1 + 8 + 8 + 4 + 4 + 4) throw FormatError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic (expected version tag JRT1)");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (crc(bytes.data(), body) != stored) throw FormatError("checkpoint: CRC mismatch");

  Reader r(bytes.data(), body);
  char magic[4];
  r.bytes(magic, 4);
  const auto width = r.pod<std::uint8_t>();
  const auto step = r.pod<std::uint64_t>();
  const auto epoch = r.pod<std::uint64_t>();
  TrainConfig cfg;
  try {
    cfg = TrainConfig::from_json(r.str());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: stored config: ") + e.what());
  }
  AnyCheckpoint out;
  if (width == 4) {
    out = decode_body<float>(r, step, epoch, cfg);
  } else if (width == 8) {
    out = decode_body<double>(r, step, epoch, cfg);
  } else {
    throw FormatError("checkpoint: unsupported scalar width " + std::to_string(width));
  }
  if (!r.done()) throw FormatError("checkpoint: trailing bytes before CRC");
  return out;
}

template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ck) {
  const auto bytes = encode_checkpoint(ck);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidArgument("checkpoint: write failed for " + path.string());
}

AnyCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template std::vector<std::uint8_t> encode_checkpoint<float>(const Checkpoint<float>&);
template std::vector<std::uint8_t> encode_checkpoint<double>(const Checkpoint<double>&);
template void save_checkpoint<float>(const std::filesystem::path&, const Checkpoint<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const Checkpoint<double>&);

}  // namespace jrt
