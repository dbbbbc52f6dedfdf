int builtin_cd (parser_t *parser, wchar_t **argv) { return change_dir (argv); }
int builtin_echo (parser_t *parser, wchar_t **argv) { return print_words (argv); }
