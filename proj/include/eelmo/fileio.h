#ifndef EELMO_FILEIO_H_
#define EELMO_FILEIO_H_

#include <string>

namespace eelmo {

// Whole-file read. Throws IoError.
std::string ReadFile(const std::string &path);

// Writes to a sibling temp file and renames it over `path`, so readers never
// see a partial file. Creates missing parent directories.
void WriteFileAtomic(const std::string &path, const std::string &contents);

}  // namespace eelmo

#endif  // EELMO_FILEIO_H_
