APP_NAME = "TweetSignal"
APP_VERSION = "0.1.0"
