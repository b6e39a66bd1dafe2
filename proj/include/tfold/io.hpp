#ifndef TFOLD_IO_HPP
#define TFOLD_IO_HPP

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tfold {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes to a temporary sibling and renames it over `path`, so readers never
/// see a partial file. Throws IoError.
void write_file_atomic(const std::string& path, std::string_view bytes);

/// All-or-nothing variant for several files: every temporary is written
/// before any is renamed, and on failure the files already moved into place
/// are removed again.
void write_files_atomic(const std::vector<std::pair<std::string, std::string>>& files);

std::string read_file(const std::string& path);

}  // namespace tfold

#endif  // TFOLD_IO_HPP
