#include "satdiff/channel.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "satdiff/error.hpp"

namespace satdiff::channel {

ChannelSpec ChannelSpec::parse(const std::string& text) {
  ChannelSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    if (first == "eps_mod") {
      if (!(fields >> spec.eps_mod) || spec.eps_mod < 0.0 || spec.eps_mod >= 1.0) {
        throw Error(Errc::bad_format,
                    "channel line " + std::to_string(line_no) +
                        ": eps_mod must be in [0,1)");
      }
      continue;
    }
    Entry entry;
    entry.from = first;
    if (!(fields >> entry.to >> entry.probability) || entry.probability < 0.0 ||
        entry.probability > 1.0) {
      throw Error(Errc::bad_format,
                  "channel line " + std::to_string(line_no) +
                      ": expected `from to probability`");
    }
    spec.entries.push_back(std::move(entry));
  }
  return spec;
}

std::string ChannelSpec::format() const {
  std::ostringstream out;
  out << "eps_mod " << eps_mod << "\n";
  for (const Entry& e : entries) {
    out << e.from << ' ' << e.to << ' ' << e.probability << "\n";
  }
  return out.str();
}

ChannelSpec ChannelSpec::identity() { return {}; }

ChannelSpec ChannelSpec::default_ambiguity_preset() {
  ChannelSpec spec;
  spec.eps_mod = 0.1;
  const std::pair<const char*, const char*> groups[] = {
      {"z", "2"}, {"2", "\\gamma"}, {"1", "l"}, {"O", "0"}};
  for (const auto& [a, b] : groups) {
    spec.entries.push_back({a, b, 0.25});
    spec.entries.push_back({b, a, 0.25});
  }
  return spec;
}

ConfusionChannel::ConfusionChannel(const ChannelSpec& spec,
                                   const sat::Vocabulary& vocab)
    : eps_mod_(spec.eps_mod) {
  row_width_ = vocab.symbol_count();
  rows_.assign(row_width_ * row_width_, 0.0);
  for (std::size_t s = 0; s < row_width_; ++s) rows_[s * row_width_ + s] = 1.0;

  std::map<std::uint32_t, double> off_diag;
  for (const ChannelSpec::Entry& e : spec.entries) {
    // The channel may cover a superset of the corpus; entries touching
    // symbols the vocabulary never saw keep their mass on the diagonal.
    if (!vocab.has_symbol(e.from) || !vocab.has_symbol(e.to)) continue;
    std::uint32_t from = vocab.symbol_id(e.from);
    std::uint32_t to = vocab.symbol_id(e.to);
    if (from == to) continue;
    rows_[from * row_width_ + to] += e.probability;
    off_diag[from] += e.probability;
  }
  for (const auto& [from, mass] : off_diag) {
    double self = 1.0 - mass;
    if (self < -1e-9) {
      throw Error(Errc::bad_config, "confusion row for '" +
                                        vocab.symbol_name(from) +
                                        "' exceeds total probability 1");
    }
    rows_[from * row_width_ + from] = std::max(self, 0.0);
  }
  for (std::uint32_t id = static_cast<std::uint32_t>(vocab.first_real_path());
       id < vocab.path_count(); ++id) {
    real_paths_.push_back(id);
  }
}

std::vector<double> ConfusionChannel::row(std::uint32_t sym_id) const {
  if (sym_id >= row_count()) {
    throw Error(Errc::missing_row,
                "no confusion row for symbol id " + std::to_string(sym_id));
  }
  return {rows_.begin() + sym_id * row_width_,
          rows_.begin() + (sym_id + 1) * row_width_};
}

sat::Canvas ConfusionChannel::observe(const sat::Canvas& truth, Rng& rng) const {
  sat::Canvas out = truth;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    std::uint32_t s = truth.sym[i];
    if (s == sat::k_sym_pad) continue;  // PAD maps to PAD always
    if (s >= row_count()) {
      throw Error(Errc::missing_row,
                  "no confusion row for symbol id " + std::to_string(s));
    }
    double r = rng.uniform();
    const double* row_begin = rows_.data() + s * row_width_;
    std::uint32_t picked = s;
    for (std::size_t v = 0; v < row_width_; ++v) {
      r -= row_begin[v];
      if (r < 0.0) {
        picked = static_cast<std::uint32_t>(v);
        break;
      }
    }
    out.sym[i] = picked;
    if (eps_mod_ > 0.0 && !real_paths_.empty() && rng.uniform() < eps_mod_) {
      out.mod[i] = real_paths_[rng.below(real_paths_.size())];
    }
  }
  return out;
}

}  // namespace satdiff::channel
