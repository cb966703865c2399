#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dnc/errors.hpp"
#include "dnc/neuralcore.hpp"

namespace dnc {

namespace {

constexpr std::array<char, 4> kMagic{'D', 'N', 'C', 'W'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

void put_f64(std::string& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

class Reader {
public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t read_le(std::size_t width, const char* what) {
    if (pos_ + width > bytes_.size())
      throw CorruptWeightsError(std::string("weights file truncated while reading ") + what);
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < width; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    pos_ += width;
    return v;
  }

  std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(read_le(4, what)); }
  double f64(const char* what) { return std::bit_cast<double>(read_le(8, what)); }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_parameters(const PolicyParameters& params, const std::filesystem::path& path) {
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kWeightsFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(params.d()));
  put_u32(out, static_cast<std::uint32_t>(params.vocab_size()));
  params.tensors().for_each([&](std::string_view, std::span<const double> values) {
    for (double v : values) put_f64(out, v);
  });

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot open weights file for writing: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error("failed writing weights file: " + path.string());
}

PolicyParameters load_parameters(const std::filesystem::path& path,
                                 std::optional<std::size_t> required_vocab) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("cannot open weights file: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw CorruptWeightsError("bad magic in weights file " + path.string());
  Reader in(bytes);
  in.skip(kMagic.size());
  const auto version = in.u32("version");
  if (version != kWeightsFormatVersion)
    throw CorruptWeightsError("unsupported weights format version " + std::to_string(version));
  const auto d = in.u32("latent dimension");
  const auto vocab = in.u32("vocabulary size");
  if (d == 0 || vocab == 0) throw CorruptWeightsError("weights file declares an empty shape");

  auto params = PolicyParameters::zeros(d, vocab);
  const std::size_t expected = params.tensors().value_count() * 8;
  if (bytes.size() - in.pos() != expected)
    throw CorruptWeightsError("weights payload has " + std::to_string(bytes.size() - in.pos()) +
                              " bytes, expected " + std::to_string(expected));
  params.tensors().for_each([&](std::string_view, std::span<double> values) {
    for (auto& v : values) v = in.f64("tensor data");
  });
  if (!params.all_finite()) throw CorruptWeightsError("weights file contains non-finite values");

  if (required_vocab && vocab < *required_vocab)
    throw TransferIncompatibleError("weights cover " + std::to_string(vocab) +
                                    " gene values but the problem needs " +
                                    std::to_string(*required_vocab));
  return params;
}

}  // namespace dnc
