int cd_builtin (WORD_LIST *list) { return change_dir (list); }
int echo_builtin (WORD_LIST *list) { return print_words (list); }
