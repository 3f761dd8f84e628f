#pragma once

#include <stdexcept>
#include <string>

namespace funclm {

// Base class for every error the library reports. Callers that only care
// about "data problem vs numerical problem" can catch Error and NonFinite.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InterfaceMismatch : public Error {
 public:
  using Error::Error;
};

class MalformedType : public Error {
 public:
  using Error::Error;
};

class UnknownBasicType : public Error {
 public:
  using Error::Error;
};

class UnknownWord : public Error {
 public:
  explicit UnknownWord(const std::string& word)
      : Error("unknown word: " + word), word_(word) {}
  const std::string& word() const noexcept { return word_; }

 private:
  std::string word_;
};

class Unparsable : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class WordNotInTypeVocabulary : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace funclm
