#include <gtest/gtest.h>

#include "fdsnn/errors.hpp"
#include "fdsnn/serialize.hpp"

#include <filesystem>
#include <fstream>

using namespace fdsnn;
namespace fs = std::filesystem;

namespace {

class Blobs : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("fdsnn_ser_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static void flip_byte(const std::string& p, std::size_t from_end) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(0, std::ios::end);
    const auto pos = static_cast<std::streamoff>(f.tellg()) - static_cast<std::streamoff>(from_end);
    f.seekg(pos);
    char c = 0;
    f.read(&c, 1);
    c ^= 0x5a;
    f.seekp(pos);
    f.write(&c, 1);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Blobs, SecretAndBootstrapKeysRoundTrip) {
  const FheParams params = preset("TOY").with_p(16);
  Rng rng(21);
  const SecretKeySet sk = gen_secret_keys(params, rng);
  const BootstrapKey bk = gen_bootstrap_key(sk, rng);
  save_secret_keys(path("sk"), sk);
  save_bootstrap_key(path("bk"), bk);

  const SecretKeySet sk2 = load_secret_keys(path("sk"));
  EXPECT_EQ(sk2.params, params);
  EXPECT_EQ(sk2.lwe, sk.lwe);
  const BootstrapKey bk2 = load_bootstrap_key(path("bk"));
  EXPECT_EQ(bk2.params(), params);
  EXPECT_EQ(bk2.ksk().entries, bk.ksk().entries);
  ASSERT_EQ(bk2.rgsw().size(), bk.rgsw().size());

  const ProgramFunction sign = ProgramFunction::make(params.p, [](std::int64_t) { return 1; });
  for (std::int64_t m = -7; m <= 8; ++m) {
    const LweCiphertext ct = lwe_encrypt(m, sk.lwe, params, rng);
    EXPECT_EQ(bootstrap(sign, ct, bk2), bootstrap(sign, ct, bk));
  }
  EXPECT_EQ(read_header(path("bk")).kind, BlobKind::BootstrapKey);
  EXPECT_EQ(read_header(path("sk")).digest, params.digest());
  EXPECT_THROW(load_secret_keys(path("bk")), FormatError);
}

TEST_F(Blobs, CiphertextsRoundTripAndKindCheck) {
  const FheParams params = preset("DESK");
  Rng rng(22);
  const SecretKeySet sk = gen_secret_keys(params, rng);
  CiphertextTensor t{{2, 2, 3}, {}};
  for (int i = 0; i < 12; ++i) t.cells.push_back(lwe_encrypt(i - 6, sk.lwe, params, rng));
  save_ciphertexts(path("ct"), t, params);
  save_ciphertexts(path("sc"), t, params, BlobKind::Scores);

  FheParams got;
  const CiphertextTensor back = load_ciphertexts(path("ct"), &got, params.digest());
  EXPECT_EQ(back.shape, t.shape);
  EXPECT_EQ(back.cells, t.cells);
  EXPECT_EQ(got, params);
  EXPECT_EQ(load_ciphertexts(path("sc"), nullptr, {}, BlobKind::Scores).cells, t.cells);
  EXPECT_THROW(load_ciphertexts(path("sc")), FormatError);
  EXPECT_THROW(load_ciphertexts(path("ct"), nullptr, params.with_p(256).digest()), FormatError);
}

TEST_F(Blobs, CorruptionIsDetected) {
  const FheParams params = preset("TOY");
  Rng rng(23);
  const SecretKeySet sk = gen_secret_keys(params, rng);
  CiphertextTensor t{{1, 1, 4}, {}};
  for (int i = 0; i < 4; ++i) t.cells.push_back(lwe_encrypt(i, sk.lwe, params, rng));
  save_ciphertexts(path("ct"), t, params);
  const auto good = file_digest(path("ct"));

  fs::copy_file(path("ct"), path("payload"));
  flip_byte(path("payload"), 20);
  EXPECT_NE(file_digest(path("payload")), good);
  EXPECT_THROW(load_ciphertexts(path("payload")), FormatError);

  fs::copy_file(path("ct"), path("short"));
  fs::resize_file(path("short"), fs::file_size(path("ct")) - 9);
  EXPECT_THROW(load_ciphertexts(path("short")), FormatError);

  std::ofstream(path("junk"), std::ios::binary) << "not a container at all";
  EXPECT_THROW(read_header(path("junk")), FormatError);
  EXPECT_THROW(read_header(path("missing")), FormatError);
}

TEST(BlobEncoding, HeaderLayout) {
  const FheParams params = preset("TOY");
  const auto blob = encode_blob(BlobKind::Scores, params, {1, 2, 3});
  ASSERT_GT(blob.size(), 24u);
  EXPECT_EQ(std::string(blob.begin(), blob.begin() + 4), "FDSN");
  EXPECT_EQ(blob[4] | (blob[5] << 8), kFormatVersion);
  EXPECT_EQ(blob[6] | (blob[7] << 8), 4);
  EXPECT_EQ(kind_name(BlobKind::BootstrapKey), "bootstrap-key");
}
