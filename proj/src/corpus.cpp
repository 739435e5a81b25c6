#include "blr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "numeric_text.hpp"

namespace blr {

namespace detail {
extern const std::string_view kDefaultStopwords;
}

namespace {

bool is_ascii_alpha(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

char to_lower_ascii(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("error while reading '" + path.string() + "'");
  return std::move(buf).str();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

Corpus::Corpus(std::vector<Article> articles) : articles_(std::move(articles)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& a : articles_) {
    if (a.id.empty()) throw DataError("article id must be non-empty");
    if (!seen.insert(a.id).second) throw DataError("duplicate article id '" + a.id + "'");
  }
}

StopwordList::StopwordList(std::set<std::string, std::less<>> words) : words_(std::move(words)) {
  for (const auto& w : words_) {
    if (w.empty()) throw DataError("stopword entries must be non-empty");
    for (unsigned char c : w) {
      if (std::isspace(c) || (c >= 'A' && c <= 'Z'))
        throw DataError("stopword '" + w + "' must be lowercase without whitespace");
    }
  }
}

StopwordList StopwordList::parse(std::string_view text) {
  std::set<std::string, std::less<>> words;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
      line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (!line.empty()) {
      std::string w;
      w.reserve(line.size());
      for (unsigned char c : line) w.push_back(to_lower_ascii(c));
      words.insert(std::move(w));
    }
    start = end + 1;
  }
  return StopwordList(std::move(words));
}

StopwordList StopwordList::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const StopwordList& StopwordList::default_english() {
  static const StopwordList list = parse(detail::kDefaultStopwords);
  return list;
}

TsvParseError::TsvParseError(std::size_t line, const std::string& what)
    : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

Corpus ingest_articles(std::span<const std::filesystem::path> sources) {
  std::vector<Article> articles;
  articles.reserve(sources.size());
  for (const auto& src : sources) {
    articles.push_back({src.stem().string(), read_file(src)});
  }
  return Corpus(std::move(articles));
}

Corpus ingest_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw DataError("not a directory: '" + dir.string() + "'");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& l, const auto& r) { return l.filename().string() < r.filename().string(); });
  return ingest_articles(files);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (is_ascii_alpha(c)) {
      current.push_back(to_lower_ascii(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::vector<WordStats> word_stats(const Corpus& corpus, const StopwordList& stopwords) {
  if (corpus.empty()) throw DataError("word statistics need at least one article");
  std::map<std::string, WordStats, std::less<>> table;
  for (const auto& article : corpus.articles()) {
    std::unordered_set<std::string> in_article;
    for (auto& tok : tokenize(article.body)) {
      if (stopwords.contains(tok)) continue;
      auto it = table.find(tok);
      if (it == table.end()) it = table.emplace(tok, WordStats{tok, 0, 0}).first;
      ++it->second.total_count;
      if (in_article.insert(std::move(tok)).second) ++it->second.article_count;
    }
  }
  std::vector<WordStats> out;
  out.reserve(table.size());
  for (auto& [_, s] : table) out.push_back(std::move(s));
  return out;
}

Dataset top_k(std::span<const WordStats> stats, std::size_t k) {
  if (k == 0) throw DataError("top-k needs k >= 1");
  if (stats.size() < k) {
    throw DataError("only " + std::to_string(stats.size()) + " words available, " + std::to_string(k) +
                    " requested");
  }
  std::vector<const WordStats*> order;
  order.reserve(stats.size());
  for (const auto& s : stats) order.push_back(&s);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [](const WordStats* l, const WordStats* r) {
                      if (l->total_count != r->total_count) return l->total_count > r->total_count;
                      return l->word < r->word;
                    });
  Dataset data;
  data.points.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    data.points.push_back({order[i]->word, static_cast<double>(order[i]->total_count),
                           static_cast<double>(order[i]->article_count)});
  }
  return data;
}

Dataset load_dataset_tsv(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw TsvParseError(lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw TsvParseError(lineno, "empty label");
    auto x = detail::parse_finite_double(fields[1]);
    if (!x) throw TsvParseError(lineno, "non-numeric x field '" + std::string(fields[1]) + "'");
    auto y = detail::parse_finite_double(fields[2]);
    if (!y) throw TsvParseError(lineno, "non-numeric y field '" + std::string(fields[2]) + "'");
    data.points.push_back({std::string(fields[0]), *x, *y});
  }
  return data;
}

Dataset load_dataset_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  return load_dataset_tsv(in);
}

void write_dataset_tsv(const Dataset& data, std::ostream& out) {
  for (const auto& p : data.points) {
    if (p.label.find_first_of("\t\n\r") != std::string::npos || p.label.empty() || p.label.front() == '#')
      throw DataError("label '" + p.label + "' cannot be written as a TSV field");
    out << p.label << '\t' << detail::format_g17(p.x) << '\t' << detail::format_g17(p.y) << '\n';
  }
  if (!out) throw DataError("failed writing dataset");
}

}  // namespace blr
