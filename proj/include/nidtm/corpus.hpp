#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nidtm/error.hpp"

namespace nidtm {

struct WordCount {
  int word = 0;
  int count = 0;

  friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Sparse bag of words, entries sorted by word id.
struct Document {
  std::vector<WordCount> entries;

  int length() const {
    int n = 0;
    for (const auto& e : entries) n += e.count;
    return n;
  }

  /// Expands counts into a token list (word ids in ascending order).
  std::vector<int> tokens() const {
    std::vector<int> out;
    out.reserve(length());
    for (const auto& e : entries) out.insert(out.end(), e.count, e.word);
    return out;
  }

  static Document from_tokens(const std::vector<int>& words) {
    std::map<int, int> counts;
    for (int w : words) ++counts[w];
    Document doc;
    for (auto [w, c] : counts) doc.entries.push_back({w, c});
    return doc;
  }

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  int d = 0;
  std::vector<Document> docs;
  std::vector<std::string> vocab;

  std::size_t size() const noexcept { return docs.size(); }
  bool empty() const noexcept { return docs.empty(); }

  void validate() const {
    if (d <= 0) fail(ErrorKind::InvalidInput, "corpus vocabulary size must be positive");
    if (!vocab.empty() && static_cast<int>(vocab.size()) != d)
      fail(ErrorKind::InvalidInput, "vocabulary has " + std::to_string(vocab.size()) +
                                        " entries but d = " + std::to_string(d));
    for (std::size_t n = 0; n < docs.size(); ++n) {
      int prev = -1;
      for (const auto& e : docs[n].entries) {
        if (e.word < 0 || e.word >= d || e.word <= prev || e.count <= 0)
          fail(ErrorKind::InvalidInput, "document " + std::to_string(n) +
                                            " has an invalid or unsorted entry");
        prev = e.word;
      }
    }
  }

  /// Subset of documents by index, sharing the vocabulary.
  Corpus subset(const std::vector<std::size_t>& ids) const {
    Corpus out;
    out.d = d;
    out.vocab = vocab;
    out.docs.reserve(ids.size());
    for (auto i : ids) out.docs.push_back(docs.at(i));
    return out;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {

inline bool next_content_line(std::istream& in, std::string& line, long& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

[[noreturn]] inline void parse_fail(const std::string& source, long line_no,
                                    const std::string& msg) {
  fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": " + msg);
}

inline long long parse_header_value(std::istream& in, const std::string& source, long& line_no,
                                    const char* what) {
  std::string line;
  if (!next_content_line(in, line, line_no))
    parse_fail(source, line_no, std::string("missing header value ") + what);
  std::istringstream ss(line);
  long long v = -1;
  std::string rest;
  if (!(ss >> v) || (ss >> rest) || v < 0)
    parse_fail(source, line_no, std::string("malformed header value ") + what);
  return v;
}

}  // namespace detail

/// UCI bag-of-words: three header lines D, W, NNZ followed by NNZ lines
/// "docID wordID count" with 1-based ids. Repeated (doc, word) pairs add up.
inline Corpus read_uci(std::istream& in, const std::string& source = "<stream>") {
  long line_no = 0;
  const long long n_docs = detail::parse_header_value(in, source, line_no, "D");
  const long long n_words = detail::parse_header_value(in, source, line_no, "W");
  const long long nnz = detail::parse_header_value(in, source, line_no, "NNZ");
  if (n_words <= 0) detail::parse_fail(source, line_no, "vocabulary size W must be positive");

  std::vector<std::map<int, long long>> rows(static_cast<std::size_t>(n_docs));
  std::string line;
  long long seen = 0;
  while (detail::next_content_line(in, line, line_no)) {
    std::istringstream ss(line);
    long long doc = 0, word = 0, count = 0;
    std::string rest;
    if (!(ss >> doc >> word >> count) || (ss >> rest))
      detail::parse_fail(source, line_no, "expected 'docID wordID count'");
    if (doc < 1 || doc > n_docs)
      detail::parse_fail(source, line_no, "docID " + std::to_string(doc) + " out of range 1.." +
                                              std::to_string(n_docs));
    if (word < 1 || word > n_words)
      detail::parse_fail(source, line_no, "wordID " + std::to_string(word) +
                                              " out of range 1.." + std::to_string(n_words));
    if (count <= 0) detail::parse_fail(source, line_no, "count must be positive");
    rows[doc - 1][static_cast<int>(word - 1)] += count;
    ++seen;
  }
  if (seen != nnz)
    detail::parse_fail(source, line_no, "header declares NNZ = " + std::to_string(nnz) +
                                            " but found " + std::to_string(seen) + " entries");

  Corpus corpus;
  corpus.d = static_cast<int>(n_words);
  corpus.docs.resize(rows.size());
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (auto [w, c] : rows[n]) corpus.docs[n].entries.push_back({w, static_cast<int>(c)});
  return corpus;
}

inline Corpus read_uci(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open corpus file " + path);
  return read_uci(in, path);
}

inline void write_uci(const Corpus& corpus, std::ostream& out) {
  std::size_t nnz = 0;
  for (const auto& doc : corpus.docs) nnz += doc.entries.size();
  out << corpus.docs.size() << '\n' << corpus.d << '\n' << nnz << '\n';
  for (std::size_t n = 0; n < corpus.docs.size(); ++n)
    for (const auto& e : corpus.docs[n].entries)
      out << (n + 1) << ' ' << (e.word + 1) << ' ' << e.count << '\n';
}

inline void write_uci(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write corpus file " + path);
  write_uci(corpus, out);
}

/// Vocabulary file: one token per line.
inline std::vector<std::string> read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::InvalidInput, "cannot open vocabulary file " + path);
  std::vector<std::string> vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    vocab.push_back(line);
  }
  while (!vocab.empty() && vocab.back().empty()) vocab.pop_back();
  return vocab;
}

}  // namespace nidtm
