#pragma once

// Corpus ingestion and word statistics.
//
// A corpus is a list of articles. For every distinct non-stopword token we
// count its total occurrences over the corpus (the regression feature X) and
// the number of distinct articles containing it (the target Y). The k most
// frequent words form the regression dataset.
//
// Tokenization rule: ASCII letters are lowercased; every other byte
// (digits, punctuation, whitespace, any UTF-8 multibyte sequence) separates
// tokens; tokens shorter than two characters are dropped. "don't" therefore
// yields "don" (the "t" is too short), "well-known" yields "well", "known".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blr/error.hpp"

namespace blr {

struct Article {
  std::string id;
  std::string body;

  friend bool operator==(const Article&, const Article&) = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Throws DataError on an empty or duplicate id.
  explicit Corpus(std::vector<Article> articles);

  const std::vector<Article>& articles() const noexcept { return articles_; }
  std::size_t size() const noexcept { return articles_.size(); }
  bool empty() const noexcept { return articles_.empty(); }

 private:
  std::vector<Article> articles_;
};

struct WordStats {
  std::string word;
  std::uint64_t total_count = 0;    // X
  std::uint64_t article_count = 0;  // Y

  friend bool operator==(const WordStats&, const WordStats&) = default;
};

struct DataPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

struct Dataset {
  std::vector<DataPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class StopwordList {
 public:
  StopwordList() = default;
  // Throws DataError if an entry is not lowercase or contains whitespace.
  explicit StopwordList(std::set<std::string, std::less<>> words);

  // Newline-delimited, one token per line. Blank lines are skipped, trailing
  // '\r' is stripped, entries are lowercased.
  static StopwordList parse(std::string_view text);
  static StopwordList load(const std::filesystem::path& path);
  // The English information-retrieval list shipped in data/stopwords_en.txt.
  static const StopwordList& default_english();

  bool contains(std::string_view word) const { return words_.contains(word); }
  std::size_t size() const noexcept { return words_.size(); }
  const std::set<std::string, std::less<>>& words() const noexcept { return words_; }

 private:
  std::set<std::string, std::less<>> words_;
};

// Raised by load_dataset_tsv; line() is 1-based.
class TsvParseError : public DataError {
 public:
  TsvParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// One article per source, id = file stem, order preserved.
Corpus ingest_articles(std::span<const std::filesystem::path> sources);

// All regular `*.txt` files in `dir`, sorted by file name.
Corpus ingest_directory(const std::filesystem::path& dir);

std::vector<std::string> tokenize(std::string_view text);

// Sorted ascending by word. Throws DataError on an empty corpus.
std::vector<WordStats> word_stats(const Corpus& corpus, const StopwordList& stopwords);

// The k words with the largest total count, descending; ties broken by word
// ascending. Throws DataError when fewer than k words exist or k == 0.
Dataset top_k(std::span<const WordStats> stats, std::size_t k);

Dataset load_dataset_tsv(std::istream& in);
Dataset load_dataset_tsv(const std::filesystem::path& path);

// label<TAB>x<TAB>y, values with 17 significant digits.
void write_dataset_tsv(const Dataset& data, std::ostream& out);

}  // namespace blr
