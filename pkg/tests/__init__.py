# Tests package for heterodet
