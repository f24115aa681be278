#include "termforge/nmt/checkpoint.hpp"

#include <cstdlib>

#include <fmt/format.h>

#include "termforge/error.hpp"
#include "termforge/io.hpp"

namespace termforge::nmt {

namespace {

void write_merges(std::string& out, std::string_view label, const BpeModel& bpe) {
  out += fmt::format("{} {} {}\n", label, bpe.num_merges(), bpe.marker());
  for (const auto& [l, r] : bpe.merges()) out += fmt::format("{} {}\n", l, r);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : lines_(io::split(text, '\n')) {}

  std::size_t line_no() const { return pos_; }

  std::vector<std::string> fields() {
    if (pos_ >= lines_.size()) throw ParseError("unexpected end of checkpoint", pos_);
    return io::split_whitespace(lines_[pos_++]);
  }

  std::vector<std::string> expect(std::string_view key, std::size_t count) {
    auto f = fields();
    if (f.empty() || f[0] != key || f.size() != count + 1) {
      throw ParseError(fmt::format("expected '{}' with {} value(s)", key, count), pos_);
    }
    return f;
  }

  long integer(std::string_view key) {
    auto f = expect(key, 1);
    char* end = nullptr;
    long v = std::strtol(f[1].c_str(), &end, 10);
    if (*end != '\0') throw ParseError("bad integer for " + std::string(key), pos_);
    return v;
  }

  std::string line() {
    if (pos_ >= lines_.size()) throw ParseError("unexpected end of checkpoint", pos_);
    return lines_[pos_++];
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

std::vector<std::string> read_vocab(Reader& r, std::string_view key) {
  long n = r.integer(key);
  if (n < 0) throw ParseError("negative vocabulary size", r.line_no());
  std::vector<std::string> tokens;
  for (long k = 0; k < n; ++k) tokens.push_back(r.line());
  return tokens;
}

BpeModel read_merges(Reader& r, std::string_view key) {
  auto f = r.expect(key, 2);
  long n = std::strtol(f[1].c_str(), nullptr, 10);
  std::vector<BpeModel::Merge> merges;
  for (long k = 0; k < n; ++k) {
    auto m = r.fields();
    if (m.size() != 2) throw ParseError("bad merge line", r.line_no());
    merges.emplace_back(m[0], m[1]);
  }
  return BpeModel(std::move(merges), f[2]);
}

}  // namespace

std::string format_checkpoint(const Seq2SeqModel& model) {
  const auto& c = model.config;
  std::string out;
  out += fmt::format("{}\n", kCheckpointMagic);
  out += fmt::format("cell lstm\nattention bilinear\n");
  out += fmt::format("layers {}\nhidden {}\nembed {}\n", c.layers, c.hidden, c.embed);
  out += fmt::format("src_vocab_cap {}\ntgt_vocab_cap {}\n", c.src_vocab_cap, c.tgt_vocab_cap);
  out += fmt::format("residual {}\npositional {}\nmax_positions {}\n", c.residual ? 1 : 0, c.positional ? 1 : 0,
                     c.max_positions);
  out += fmt::format("segmentation {}\n", model.subwords ? "bpe" : "word");
  out += fmt::format("src_vocab {}\n", model.src_vocab.size());
  for (const auto& t : model.src_vocab.tokens()) out += t + "\n";
  out += fmt::format("tgt_vocab {}\n", model.tgt_vocab.size());
  for (const auto& t : model.tgt_vocab.tokens()) out += t + "\n";
  if (model.subwords) {
    write_merges(out, "bpe_source", model.subwords->source);
    write_merges(out, "bpe_target", model.subwords->target);
  }
  model.params.visit([&](const std::string& name, const auto& t) {
    out += fmt::format("tensor {} {} {}\n", name, t.rows(), t.cols());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        if (j) out += ' ';
        out += fmt::format("{:a}", t(i, j));
      }
      out += '\n';
    }
  });
  out += "end\n";
  return out;
}

Seq2SeqModel parse_checkpoint(std::string_view text) {
  Reader r(text);
  if (io::trim(r.line()) != kCheckpointMagic) throw FormatError("not a termforge-nmt-v1 checkpoint");
  if (r.expect("cell", 1)[1] != "lstm") throw FormatError("unsupported cell type");
  if (r.expect("attention", 1)[1] != "bilinear") throw FormatError("unsupported attention type");
  ModelConfig c;
  c.layers = static_cast<int>(r.integer("layers"));
  c.hidden = static_cast<int>(r.integer("hidden"));
  c.embed = static_cast<int>(r.integer("embed"));
  c.src_vocab_cap = static_cast<std::size_t>(r.integer("src_vocab_cap"));
  c.tgt_vocab_cap = static_cast<std::size_t>(r.integer("tgt_vocab_cap"));
  c.residual = r.integer("residual") != 0;
  c.positional = r.integer("positional") != 0;
  c.max_positions = static_cast<int>(r.integer("max_positions"));
  c.validate();
  auto seg = r.expect("segmentation", 1)[1];
  if (seg != "word" && seg != "bpe") throw FormatError("unknown segmentation '" + seg + "'");
  auto src = Vocab::from_tokens(read_vocab(r, "src_vocab"));
  auto tgt = Vocab::from_tokens(read_vocab(r, "tgt_vocab"));

  Seq2SeqModel model = Seq2SeqModel::create(c, std::move(src), std::move(tgt), 0);
  if (seg == "bpe") {
    Subwords sw;
    sw.source = read_merges(r, "bpe_source");
    sw.target = read_merges(r, "bpe_target");
    model.subwords = std::move(sw);
  }
  model.params.visit([&](const std::string& name, auto& t) {
    auto f = r.expect("tensor", 3);
    if (f[1] != name || std::to_string(t.rows()) != f[2] || std::to_string(t.cols()) != f[3]) {
      throw FormatError(fmt::format("tensor {} has unexpected header at line {}", name, r.line_no()));
    }
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      auto values = r.fields();
      if (static_cast<Eigen::Index>(values.size()) != t.cols()) {
        throw ParseError("wrong number of values in tensor " + name, r.line_no());
      }
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        char* end = nullptr;
        double v = std::strtod(values[static_cast<std::size_t>(j)].c_str(), &end);
        if (*end != '\0') throw ParseError("bad value in tensor " + name, r.line_no());
        t(i, j) = v;
      }
    }
  });
  if (io::trim(r.line()) != "end") throw FormatError("missing end marker");
  if (!model.params.all_finite()) throw FormatError("checkpoint holds non-finite parameters");
  return model;
}

void save_checkpoint(const Seq2SeqModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, format_checkpoint(model));
}

Seq2SeqModel load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(io::read_file(path)); }

}  // namespace termforge::nmt
