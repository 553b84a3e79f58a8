#include "fdsnn/serialize.hpp"

#include "fdsnn/errors.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace fdsnn {

namespace {

constexpr char kMagic[4] = {'F', 'D', 'S', 'N'};

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  void coeffs(const std::vector<Coeff>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Coeff c : v) u32(c);
  }
  void lwe(const LweCiphertext& ct) {
    coeffs(ct.a);
    u32(ct.b);
  }
  void gadget(const GadgetParams& g) {
    u32(g.base_log);
    u32(g.levels);
  }
  std::vector<std::uint8_t>& data() { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  const std::uint8_t* take(std::size_t n) {
    if (n > n_ - off_) throw FormatError("truncated FDSN container");
    const std::uint8_t* r = p_ + off_;
    off_ += n;
    return r;
  }
  std::vector<Coeff> coeffs(std::size_t expect) {
    const std::uint32_t n = u32();
    if (n != expect) throw FormatError("unexpected vector length in FDSN container");
    std::vector<Coeff> v(n);
    for (Coeff& c : v) c = u32();
    return v;
  }
  LweCiphertext lwe(std::size_t dim) {
    LweCiphertext ct;
    ct.a = coeffs(dim);
    ct.b = u32();
    return ct;
  }
  GadgetParams gadget() {
    GadgetParams g;
    g.base_log = u32();
    g.levels = u32();
    return g;
  }
  bool done() const { return off_ == n_; }

 private:
  std::uint64_t le(int n) {
    const std::uint8_t* b = take(n);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t off_ = 0;
};

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw FormatError("write failed for " + path);
}

struct Blob {
  BlobHeader header;
  std::vector<std::uint8_t> payload;
};

Blob decode_blob(const std::vector<std::uint8_t>& data, const std::string& path) {
  Reader r(data.data(), data.size());
  if (data.size() < 4 || std::memcmp(r.take(4), kMagic, 4) != 0) throw FormatError(path + ": not an FDSN container");
  Blob b;
  b.header.version = r.u16();
  if (b.header.version != kFormatVersion)
    throw FormatError(path + ": unsupported format version " + std::to_string(b.header.version));
  const std::uint16_t kind = r.u16();
  if (kind < 1 || kind > 4) throw FormatError(path + ": unknown container kind");
  b.header.kind = static_cast<BlobKind>(kind);
  const std::uint8_t* d = r.take(16);
  b.header.digest.assign(reinterpret_cast<const char*>(d), 16);
  const std::uint32_t jlen = r.u32();
  const std::uint8_t* j = r.take(jlen);
  b.header.params = FheParams::from_json(std::string(reinterpret_cast<const char*>(j), jlen));
  if (b.header.params.digest() != b.header.digest)
    throw FormatError(path + ": params digest mismatch (header " + b.header.digest + ", params " +
                      b.header.params.digest() + ")");
  const std::uint64_t plen = r.u64();
  const std::uint8_t* p = r.take(plen);
  b.payload.assign(p, p + plen);
  if (r.u64() != fnv1a(b.payload.data(), b.payload.size())) throw FormatError(path + ": payload checksum mismatch");
  if (!r.done()) throw FormatError(path + ": trailing bytes after container");
  return b;
}

Blob load_blob(const std::string& path, BlobKind expect) {
  Blob b = decode_blob(read_file(path), path);
  if (b.header.kind != expect)
    throw FormatError(path + ": holds " + kind_name(b.header.kind) + ", expected " + kind_name(expect));
  return b;
}

}  // namespace

std::string kind_name(BlobKind k) {
  switch (k) {
    case BlobKind::SecretKey: return "secret-key";
    case BlobKind::BootstrapKey: return "bootstrap-key";
    case BlobKind::Ciphertexts: return "ciphertexts";
    case BlobKind::Scores: return "scores";
  }
  return "unknown";
}

std::vector<std::uint8_t> encode_blob(BlobKind kind, const FheParams& params, const std::vector<std::uint8_t>& payload) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(kFormatVersion);
  w.u16(static_cast<std::uint16_t>(kind));
  const std::string digest = params.digest();
  w.bytes(digest.data(), 16);
  const std::string js = params.to_json();
  w.u32(static_cast<std::uint32_t>(js.size()));
  w.bytes(js.data(), js.size());
  w.u64(payload.size());
  w.bytes(payload.data(), payload.size());
  w.u64(fnv1a(payload.data(), payload.size()));
  return std::move(w.data());
}

BlobHeader read_header(const std::string& path) { return decode_blob(read_file(path), path).header; }

void save_secret_keys(const std::string& path, const SecretKeySet& sk) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(sk.lwe.s.size()));
  for (std::int32_t b : sk.lwe.s) w.u8(static_cast<std::uint8_t>(b));
  w.coeffs(sk.ring.z.coeffs());
  write_file(path, encode_blob(BlobKind::SecretKey, sk.params, w.data()));
}

SecretKeySet load_secret_keys(const std::string& path) {
  const Blob b = load_blob(path, BlobKind::SecretKey);
  Reader r(b.payload.data(), b.payload.size());
  SecretKeySet sk;
  sk.params = b.header.params;
  const std::uint32_t n = r.u32();
  if (n != sk.params.n) throw FormatError(path + ": LWE key length differs from n");
  sk.lwe.s.resize(n);
  for (auto& s : sk.lwe.s) {
    s = r.u8();
    if (s > 1) throw FormatError(path + ": non-binary key entry");
  }
  sk.ring.z = NegacyclicPoly(r.coeffs(sk.params.N));
  if (!r.done()) throw FormatError(path + ": trailing payload bytes");
  return sk;
}

void save_bootstrap_key(const std::string& path, const BootstrapKey& bk) {
  Writer w;
  w.u32(static_cast<std::uint32_t>(bk.rgsw().size()));
  for (const RgswCiphertext& g : bk.rgsw()) {
    w.gadget(g.gadget);
    w.u32(static_cast<std::uint32_t>(g.rows.size()));
    for (const RlweCiphertext& row : g.rows) {
      w.coeffs(row.a.coeffs());
      w.coeffs(row.b.coeffs());
    }
  }
  const KeySwitchKey& k = bk.ksk();
  w.u32(static_cast<std::uint32_t>(k.in_dim));
  w.u32(static_cast<std::uint32_t>(k.out_dim));
  w.gadget(k.gadget);
  w.u32(static_cast<std::uint32_t>(k.entries.size()));
  for (const LweCiphertext& e : k.entries) w.lwe(e);
  write_file(path, encode_blob(BlobKind::BootstrapKey, bk.params(), w.data()));
}

BootstrapKey load_bootstrap_key(const std::string& path) {
  const Blob b = load_blob(path, BlobKind::BootstrapKey);
  const FheParams& params = b.header.params;
  Reader r(b.payload.data(), b.payload.size());
  const std::uint32_t count = r.u32();
  if (count != params.n) throw FormatError(path + ": bootstrap key count differs from n");
  std::vector<RgswCiphertext> rgsw(count);
  for (RgswCiphertext& g : rgsw) {
    g.gadget = r.gadget();
    if (!(g.gadget == params.gadget)) throw FormatError(path + ": gadget differs from params");
    const std::uint32_t rows = r.u32();
    if (rows != 2 * g.gadget.levels) throw FormatError(path + ": bad RGSW row count");
    g.rows.resize(rows);
    for (RlweCiphertext& row : g.rows) {
      row.a = NegacyclicPoly(r.coeffs(params.N));
      row.b = NegacyclicPoly(r.coeffs(params.N));
    }
  }
  KeySwitchKey k;
  k.in_dim = r.u32();
  k.out_dim = r.u32();
  k.gadget = r.gadget();
  if (k.in_dim != params.N || k.out_dim != params.n || !(k.gadget == params.ks))
    throw FormatError(path + ": key-switch key shape differs from params");
  const std::uint32_t entries = r.u32();
  if (entries != k.in_dim * k.gadget.levels) throw FormatError(path + ": bad key-switch entry count");
  k.entries.reserve(entries);
  for (std::uint32_t i = 0; i < entries; ++i) k.entries.push_back(r.lwe(k.out_dim));
  if (!r.done()) throw FormatError(path + ": trailing payload bytes");
  return BootstrapKey(params, std::move(rgsw), std::move(k));
}

void save_ciphertexts(const std::string& path, const CiphertextTensor& t, const FheParams& params, BlobKind kind) {
  if (kind != BlobKind::Ciphertexts && kind != BlobKind::Scores) throw ParameterError("not a ciphertext kind");
  if (t.cells.size() != t.shape.size()) throw ParameterError("tensor cell count does not match its shape");
  Writer w;
  w.u32(static_cast<std::uint32_t>(t.shape.c));
  w.u32(static_cast<std::uint32_t>(t.shape.h));
  w.u32(static_cast<std::uint32_t>(t.shape.w));
  w.u32(static_cast<std::uint32_t>(params.n));
  for (const LweCiphertext& ct : t.cells) {
    if (ct.dim() != params.n) throw ParameterError("ciphertext dimension differs from n");
    for (Coeff c : ct.a) w.u32(c);
    w.u32(ct.b);
  }
  write_file(path, encode_blob(kind, params, w.data()));
}

CiphertextTensor load_ciphertexts(const std::string& path, FheParams* params, const std::string& expected_digest,
                                  BlobKind kind) {
  const Blob b = load_blob(path, kind);
  if (!expected_digest.empty() && b.header.digest != expected_digest)
    throw FormatError(path + ": params digest " + b.header.digest + " does not match key digest " + expected_digest);
  Reader r(b.payload.data(), b.payload.size());
  CiphertextTensor t;
  t.shape.c = static_cast<int>(r.u32());
  t.shape.h = static_cast<int>(r.u32());
  t.shape.w = static_cast<int>(r.u32());
  const std::uint32_t n = r.u32();
  if (n != b.header.params.n) throw FormatError(path + ": ciphertext dimension differs from n");
  t.cells.resize(t.shape.size());
  for (LweCiphertext& ct : t.cells) {
    ct.a.resize(n);
    for (Coeff& c : ct.a) c = r.u32();
    ct.b = r.u32();
  }
  if (!r.done()) throw FormatError(path + ": trailing payload bytes");
  if (params) *params = b.header.params;
  return t;
}

std::string file_digest(const std::string& path) {
  const auto d = read_file(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(d.data(), d.size())));
  return buf;
}

}  // namespace fdsnn
